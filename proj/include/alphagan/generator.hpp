#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "alphagan/imgcore.hpp"
#include "alphagan/nn/layers.hpp"

namespace alphagan {

struct GeneratorConfig {
    int output_stride = 8;  // 8 or 16
    bool use_aspp = true;
    bool use_skips = true;
    bool use_multigrid = false;  // accepted but unimplemented
    double width_multiplier = 1.0;
    int input_channels = 4;
    bool normalize_rgb = true;
    std::array<double, 3> rgb_mean{0.485, 0.456, 0.406};
    std::array<double, 3> rgb_std{0.229, 0.224, 0.225};

    void validate() const {
        if (output_stride != 8 && output_stride != 16)
            throw std::runtime_error("output_stride must be 8 or 16");
        if (width_multiplier <= 0 || width_multiplier > 1)
            throw std::runtime_error("width_multiplier must be in (0,1]");
        if (use_multigrid) throw std::runtime_error("multigrid variant is unsupported");
    }

    // Layer widths scale with width_multiplier, rounded to the nearest
    // multiple of 8, floor 8.
    int scaled(int base) const {
        int r = static_cast<int>(std::llround(base * width_multiplier / 8.0)) * 8;
        return std::max(8, r);
    }
};

namespace detail {

using nn::Tensor;

// Residual bottleneck: 1x1 -> 3x3 (stride/dilation) -> 1x1, projection
// shortcut when shape changes.
template <typename T>
class Bottleneck {
public:
    Bottleneck(int in_ch, int mid_ch, int out_ch, int stride, int dilation)
        : conv1(in_ch, mid_ch, 1),
          bn1(mid_ch),
          conv2(mid_ch, mid_ch, 3, stride, dilation, dilation),
          bn2(mid_ch),
          conv3(mid_ch, out_ch, 1),
          bn3(out_ch),
          has_down(stride != 1 || in_ch != out_ch) {
        if (has_down) {
            down_conv = std::make_unique<nn::Conv2d<T>>(in_ch, out_ch, 1, stride);
            down_bn = std::make_unique<nn::BatchNorm2d<T>>(out_ch);
        }
    }

    void reg(nn::ParamRegistry<T>& r, const std::string& p) {
        conv1.reg(r, p + ".conv1");
        bn1.reg(r, p + ".bn1");
        conv2.reg(r, p + ".conv2");
        bn2.reg(r, p + ".bn2");
        conv3.reg(r, p + ".conv3");
        bn3.reg(r, p + ".bn3");
        if (has_down) {
            down_conv->reg(r, p + ".downsample.0");
            down_bn->reg(r, p + ".downsample.1");
        }
    }

    void init(std::mt19937_64& rng) {
        conv1.init(rng);
        conv2.init(rng);
        conv3.init(rng);
        if (has_down) down_conv->init(rng);
    }

    void collect_bns(std::vector<nn::BatchNorm2d<T>*>& out) {
        out.push_back(&bn1);
        out.push_back(&bn2);
        out.push_back(&bn3);
        if (has_down) out.push_back(down_bn.get());
    }

    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> main = relu2.forward(bn2.forward(conv2.forward(
            relu1.forward(bn1.forward(conv1.forward(x))))));
        main = bn3.forward(conv3.forward(main));
        Tensor<T> id = has_down ? down_bn->forward(down_conv->forward(x)) : x;
        for (size_t i = 0; i < main.size(); ++i) main.v[i] += id.v[i];
        return relu_out.forward(main);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> d = relu_out.backward(dy);
        Tensor<T> dmain = conv1.backward(bn1.backward(relu1.backward(
            conv2.backward(bn2.backward(relu2.backward(
                conv3.backward(bn3.backward(d))))))));
        Tensor<T> did = has_down ? down_conv->backward(down_bn->backward(d)) : d;
        for (size_t i = 0; i < dmain.size(); ++i) dmain.v[i] += did.v[i];
        return dmain;
    }

    nn::Conv2d<T> conv1, conv2, conv3;
    nn::BatchNorm2d<T> bn1, bn2, bn3;
    nn::ReLU<T> relu1, relu2, relu_out;
    bool has_down;
    std::unique_ptr<nn::Conv2d<T>> down_conv;
    std::unique_ptr<nn::BatchNorm2d<T>> down_bn;
};

template <typename T>
struct ConvBnRelu {
    nn::Conv2d<T> conv;
    nn::BatchNorm2d<T> bn;
    nn::ReLU<T> relu;

    ConvBnRelu(int in, int out, int k, int stride = 1, int pad = 0, int dil = 1)
        : conv(in, out, k, stride, pad, dil), bn(out) {}

    void reg(nn::ParamRegistry<T>& r, const std::string& p) {
        conv.reg(r, p + ".conv");
        bn.reg(r, p + ".bn");
    }
    void init(std::mt19937_64& rng) { conv.init(rng); }
    void collect_bns(std::vector<nn::BatchNorm2d<T>*>& out) { out.push_back(&bn); }

    Tensor<T> forward(const Tensor<T>& x) { return relu.forward(bn.forward(conv.forward(x))); }
    Tensor<T> backward(const Tensor<T>& dy) {
        return conv.backward(bn.backward(relu.backward(dy)));
    }
};

}  // namespace detail

// Dilated-ResNet50 encoder. Tensor names mirror the standard 50-layer
// residual classifier so pretrained weights map one-to-one.
template <typename T>
class Encoder {
public:
    struct Output {
        nn::Tensor<T> bottleneck;
        nn::Tensor<T> skip_os4;  // conv2_x output, H/4
        nn::Tensor<T> skip_os2;  // conv1 output, H/2
        nn::PoolIndices pool_indices;
    };

    explicit Encoder(const GeneratorConfig& cfg)
        : cfg_(cfg),
          conv1(cfg.input_channels, cfg.scaled(64), 7, 2, 3),
          bn1(cfg.scaled(64)),
          pool(3, 2, 1) {
        int s3 = cfg.output_stride == 8 ? 1 : 2;
        int d3 = cfg.output_stride == 8 ? 2 : 1;
        int d4 = cfg.output_stride == 8 ? 4 : 2;
        make_stage(layer1, cfg.scaled(64), cfg.scaled(64), cfg.scaled(256), 3, 1, 1);
        make_stage(layer2, cfg.scaled(256), cfg.scaled(128), cfg.scaled(512), 4, 2, 1);
        make_stage(layer3, cfg.scaled(512), cfg.scaled(256), cfg.scaled(1024), 6, s3, d3);
        make_stage(layer4, cfg.scaled(1024), cfg.scaled(512), cfg.scaled(2048), 3, 1, d4);
    }

    void reg(nn::ParamRegistry<T>& r, const std::string& p) {
        conv1.reg(r, p + ".conv1");
        bn1.reg(r, p + ".bn1");
        reg_stage(r, layer1, p + ".layer1");
        reg_stage(r, layer2, p + ".layer2");
        reg_stage(r, layer3, p + ".layer3");
        reg_stage(r, layer4, p + ".layer4");
    }

    void init(std::mt19937_64& rng) {
        conv1.init(rng);
        for (auto* s : {&layer1, &layer2, &layer3, &layer4})
            for (auto& b : *s) b->init(rng);
    }

    void collect_bns(std::vector<nn::BatchNorm2d<T>*>& out) {
        out.push_back(&bn1);
        for (auto* s : {&layer1, &layer2, &layer3, &layer4})
            for (auto& b : *s) b->collect_bns(out);
    }

    Output forward(const nn::Tensor<T>& x) {
        if (x.h % 32 != 0 || x.w % 32 != 0)
            throw std::runtime_error("input dimensions must be divisible by 32");
        Output o;
        o.skip_os2 = relu1.forward(bn1.forward(conv1.forward(x)));
        nn::Tensor<T> f = pool.forward(o.skip_os2, o.pool_indices);
        for (auto& b : layer1) f = b->forward(f);
        o.skip_os4 = f;
        for (auto& b : layer2) f = b->forward(f);
        for (auto& b : layer3) f = b->forward(f);
        for (auto& b : layer4) f = b->forward(f);
        o.bottleneck = std::move(f);
        return o;
    }

    nn::Tensor<T> backward(const nn::Tensor<T>& d_bottleneck, const nn::Tensor<T>* d_skip4,
                           const nn::Tensor<T>* d_skip2) {
        nn::Tensor<T> g = d_bottleneck;
        for (auto it = layer4.rbegin(); it != layer4.rend(); ++it) g = (*it)->backward(g);
        for (auto it = layer3.rbegin(); it != layer3.rend(); ++it) g = (*it)->backward(g);
        for (auto it = layer2.rbegin(); it != layer2.rend(); ++it) g = (*it)->backward(g);
        if (d_skip4)
            for (size_t i = 0; i < g.size(); ++i) g.v[i] += d_skip4->v[i];
        for (auto it = layer1.rbegin(); it != layer1.rend(); ++it) g = (*it)->backward(g);
        g = pool.backward(g);
        if (d_skip2)
            for (size_t i = 0; i < g.size(); ++i) g.v[i] += d_skip2->v[i];
        return conv1.backward(bn1.backward(relu1.backward(g)));
    }

    nn::Conv2d<T> conv1;
    nn::BatchNorm2d<T> bn1;
    nn::ReLU<T> relu1;
    nn::MaxPool2d<T> pool;
    std::vector<std::unique_ptr<detail::Bottleneck<T>>> layer1, layer2, layer3, layer4;

private:
    void make_stage(std::vector<std::unique_ptr<detail::Bottleneck<T>>>& stage, int in_ch,
                    int mid_ch, int out_ch, int blocks, int stride, int dilation) {
        stage.push_back(std::make_unique<detail::Bottleneck<T>>(in_ch, mid_ch, out_ch, stride, dilation));
        for (int i = 1; i < blocks; ++i)
            stage.push_back(std::make_unique<detail::Bottleneck<T>>(out_ch, mid_ch, out_ch, 1, dilation));
    }
    void reg_stage(nn::ParamRegistry<T>& r, std::vector<std::unique_ptr<detail::Bottleneck<T>>>& s,
                   const std::string& p) {
        for (size_t i = 0; i < s.size(); ++i) s[i]->reg(r, p + "." + std::to_string(i));
    }
    GeneratorConfig cfg_;
};

// Atrous spatial pyramid pooling: 1x1, three dilated 3x3 (r=6/12/18) and an
// image-pooling branch, concatenated and fused by a 1x1 convolution. With
// use_aspp=false only the fuse convolution remains.
template <typename T>
class Aspp {
public:
    Aspp(const GeneratorConfig& cfg)
        : enabled(cfg.use_aspp), in_ch(cfg.scaled(2048)), out_ch(cfg.scaled(256)) {
        if (enabled) {
            b0 = std::make_unique<detail::ConvBnRelu<T>>(in_ch, out_ch, 1);
            b1 = std::make_unique<detail::ConvBnRelu<T>>(in_ch, out_ch, 3, 1, 6, 6);
            b2 = std::make_unique<detail::ConvBnRelu<T>>(in_ch, out_ch, 3, 1, 12, 12);
            b3 = std::make_unique<detail::ConvBnRelu<T>>(in_ch, out_ch, 3, 1, 18, 18);
            pool_conv = std::make_unique<detail::ConvBnRelu<T>>(in_ch, out_ch, 1);
            fuse = std::make_unique<detail::ConvBnRelu<T>>(5 * out_ch, out_ch, 1);
        } else {
            fuse = std::make_unique<detail::ConvBnRelu<T>>(in_ch, out_ch, 1);
        }
    }

    void reg(nn::ParamRegistry<T>& r, const std::string& p) {
        if (enabled) {
            b0->reg(r, p + ".b0");
            b1->reg(r, p + ".b1");
            b2->reg(r, p + ".b2");
            b3->reg(r, p + ".b3");
            pool_conv->reg(r, p + ".pool");
        }
        fuse->reg(r, p + ".fuse");
    }

    void init(std::mt19937_64& rng) {
        if (enabled) {
            b0->init(rng); b1->init(rng); b2->init(rng); b3->init(rng);
            pool_conv->init(rng);
        }
        fuse->init(rng);
    }

    void collect_bns(std::vector<nn::BatchNorm2d<T>*>& out) {
        if (enabled) {
            b0->collect_bns(out); b1->collect_bns(out); b2->collect_bns(out);
            b3->collect_bns(out); pool_conv->collect_bns(out);
        }
        fuse->collect_bns(out);
    }

    nn::Tensor<T> forward(const nn::Tensor<T>& f) {
        if (!enabled) return fuse->forward(f);
        nn::Tensor<T> y0 = b0->forward(f);
        nn::Tensor<T> y1 = b1->forward(f);
        nn::Tensor<T> y2 = b2->forward(f);
        nn::Tensor<T> y3 = b3->forward(f);
        nn::Tensor<T> yp = bcast.forward(pool_conv->forward(gap.forward(f)), f.h, f.w);
        nn::Tensor<T> cat = nn::concat_channels<T>({&y0, &y1, &y2, &y3, &yp});
        return fuse->forward(cat);
    }

    nn::Tensor<T> backward(const nn::Tensor<T>& dy) {
        if (!enabled) return fuse->backward(dy);
        nn::Tensor<T> dcat = fuse->backward(dy);
        auto parts = nn::split_channels(dcat, {out_ch, out_ch, out_ch, out_ch, out_ch});
        nn::Tensor<T> df = b0->backward(parts[0]);
        nn::Tensor<T> d1 = b1->backward(parts[1]);
        nn::Tensor<T> d2 = b2->backward(parts[2]);
        nn::Tensor<T> d3 = b3->backward(parts[3]);
        nn::Tensor<T> dp = gap.backward(pool_conv->backward(bcast.backward(parts[4])));
        for (size_t i = 0; i < df.size(); ++i) df.v[i] += d1.v[i] + d2.v[i] + d3.v[i] + dp.v[i];
        return df;
    }

    bool enabled;
    int in_ch, out_ch;
    std::unique_ptr<detail::ConvBnRelu<T>> b0, b1, b2, b3, pool_conv, fuse;
    nn::GlobalAvgPool<T> gap;
    nn::Broadcast2d<T> bcast;
};

// Decoder: bilinear upsample, skip concats, max-unpooling with saved encoder
// indices, fractionally-strided upsampling and a sigmoid-bounded 1-channel
// output.
template <typename T>
class Decoder {
public:
    Decoder(const GeneratorConfig& cfg)
        : cfg_(cfg),
          skips(cfg.use_skips),
          aspp_ch(cfg.scaled(256)),
          sk4_ch(cfg.scaled(48)),
          sk2_ch(cfg.scaled(32)),
          reduce_os4(cfg.scaled(256), cfg.scaled(48), 1),
          reduce_os2(cfg.scaled(64), cfg.scaled(32), 1),
          conv1(cfg.scaled(256) + (cfg.use_skips ? cfg.scaled(48) : 0), cfg.scaled(256), 3, 1, 1),
          conv2(cfg.scaled(256), cfg.scaled(128), 3, 1, 1),
          conv3(cfg.scaled(128), cfg.scaled(64), 3, 1, 1),
          conv4(cfg.scaled(64) + (cfg.use_skips ? cfg.scaled(32) : 0), cfg.scaled(64), 3, 1, 1),
          deconv(cfg.scaled(64), cfg.scaled(64), 3, 2, 1, 1),
          deconv_bn(cfg.scaled(64)),
          conv5(cfg.scaled(64), cfg.scaled(32), 3, 1, 1),
          conv6(cfg.scaled(32) + (cfg.use_skips ? 3 : 0), cfg.scaled(32), 3, 1, 1),
          conv7(cfg.scaled(32), cfg.scaled(32), 3, 1, 1),
          out_conv(cfg.scaled(32), 1, 3, 1, 1, 1, /*bias=*/true) {}

    void reg(nn::ParamRegistry<T>& r, const std::string& p) {
        if (skips) {
            reduce_os4.reg(r, p + ".reduce_os4");
            reduce_os2.reg(r, p + ".reduce_os2");
        }
        conv1.reg(r, p + ".conv1");
        conv2.reg(r, p + ".conv2");
        conv3.reg(r, p + ".conv3");
        conv4.reg(r, p + ".conv4");
        deconv.reg(r, p + ".deconv");
        deconv_bn.reg(r, p + ".deconv_bn");
        conv5.reg(r, p + ".conv5");
        conv6.reg(r, p + ".conv6");
        conv7.reg(r, p + ".conv7");
        out_conv.reg(r, p + ".out");
    }

    void init(std::mt19937_64& rng) {
        if (skips) { reduce_os4.init(rng); reduce_os2.init(rng); }
        for (auto* c : {&conv1, &conv2, &conv3, &conv4, &conv5, &conv6, &conv7})
            c->init(rng);
        deconv.init(rng);
        out_conv.init(rng);
    }

    void collect_bns(std::vector<nn::BatchNorm2d<T>*>& out) {
        if (skips) { reduce_os4.collect_bns(out); reduce_os2.collect_bns(out); }
        conv1.collect_bns(out); conv2.collect_bns(out); conv3.collect_bns(out);
        conv4.collect_bns(out); out.push_back(&deconv_bn);
        conv5.collect_bns(out); conv6.collect_bns(out); conv7.collect_bns(out);
    }

    nn::Tensor<T> forward(const nn::Tensor<T>& bottleneck, const nn::Tensor<T>& skip_os4,
                          const nn::Tensor<T>& skip_os2, const nn::PoolIndices& pool_indices,
                          const nn::Tensor<T>& rgb) {
        nn::Tensor<T> f = up1.forward(bottleneck);
        used_up2_ = false;
        if (f.h != skip_os4.h) {  // output_stride 16 needs a second doubling
            f = up2.forward(f);
            used_up2_ = true;
        }
        if (skips) {
            nn::Tensor<T> s4 = reduce_os4.forward(skip_os4);
            f = nn::concat_channels<T>({&f, &s4});
        }
        f = conv3.forward(conv2.forward(conv1.forward(f)));
        f = unpool.forward(f, pool_indices);
        if (skips) {
            nn::Tensor<T> s2 = reduce_os2.forward(skip_os2);
            f = nn::concat_channels<T>({&f, &s2});
        }
        f = conv4.forward(f);
        f = deconv_relu.forward(deconv_bn.forward(deconv.forward(f)));
        f = conv5.forward(f);
        if (skips) f = nn::concat_channels<T>({&f, &rgb});
        f = conv7.forward(conv6.forward(f));
        return sigmoid.forward(out_conv.forward(f));
    }

    struct Grads {
        nn::Tensor<T> d_bottleneck, d_skip4, d_skip2;
        bool has_skips = false;
    };

    Grads backward(const nn::Tensor<T>& dalpha) {
        nn::Tensor<T> g = out_conv.backward(sigmoid.backward(dalpha));
        g = conv6.backward(conv7.backward(g));
        if (skips) g = nn::split_channels(g, {cfg_.scaled(32), 3})[0];
        g = conv5.backward(g);
        g = deconv.backward(deconv_bn.backward(deconv_relu.backward(g)));
        g = conv4.backward(g);
        Grads out;
        out.has_skips = skips;
        if (skips) {
            auto parts = nn::split_channels(g, {cfg_.scaled(64), cfg_.scaled(32)});
            g = std::move(parts[0]);
            out.d_skip2 = reduce_os2.backward(parts[1]);
        }
        g = unpool.backward(g);
        g = conv1.backward(conv2.backward(conv3.backward(g)));
        if (skips) {
            auto parts = nn::split_channels(g, {cfg_.scaled(256), cfg_.scaled(48)});
            g = std::move(parts[0]);
            out.d_skip4 = reduce_os4.backward(parts[1]);
        }
        if (used_up2_) g = up2.backward(g);
        out.d_bottleneck = up1.backward(g);
        return out;
    }

    GeneratorConfig cfg_;
    bool skips;
    int aspp_ch, sk4_ch, sk2_ch;
    detail::ConvBnRelu<T> reduce_os4, reduce_os2;
    detail::ConvBnRelu<T> conv1, conv2, conv3, conv4;
    nn::ConvTranspose2d<T> deconv;
    nn::BatchNorm2d<T> deconv_bn;
    nn::ReLU<T> deconv_relu;
    detail::ConvBnRelu<T> conv5, conv6, conv7;
    nn::Conv2d<T> out_conv;
    nn::Sigmoid<T> sigmoid;
    nn::UpsampleBilinear2x<T> up1, up2;
    nn::MaxUnpool2d<T> unpool;

private:
    bool used_up2_ = false;
};

// Source tensors for pretrained-encoder loading: name -> (shape, data).
using NamedTensors = std::map<std::string, std::pair<std::vector<int>, std::vector<float>>>;

template <typename T>
class Generator {
public:
    explicit Generator(const GeneratorConfig& cfg)
        : cfg_(cfg), encoder(cfg), aspp(cfg), decoder(cfg) {
        cfg.validate();
        encoder.reg(registry_, "encoder");
        aspp.reg(registry_, "aspp");
        decoder.reg(registry_, "decoder");
        encoder.collect_bns(bns_);
        aspp.collect_bns(bns_);
        decoder.collect_bns(bns_);
    }

    const GeneratorConfig& config() const { return cfg_; }
    nn::ParamRegistry<T>& params() { return registry_; }

    void init(uint64_t seed) {
        std::mt19937_64 rng(seed);
        encoder.init(rng);
        aspp.init(rng);
        decoder.init(rng);
    }

    // Copies standard residual-classifier tensors into the encoder; the first
    // convolution is widened to 4 input channels with the extra slice zeroed.
    void apply_pretrained(const NamedTensors& src) {
        for (auto* p : registry_.items) {
            if (p->name.rfind("encoder.", 0) != 0) continue;
            std::string key = p->name.substr(8);
            auto it = src.find(key);
            if (it == src.end())
                throw std::runtime_error("pretrained weights missing tensor: " + key);
            const auto& [shape, data] = it->second;
            if (key == "conv1.weight") {
                int out = p->shape[0];
                std::vector<int> want{out, 3, 7, 7};
                if (shape != want || p->shape[1] != 4)
                    throw std::runtime_error("pretrained conv1 shape mismatch");
                std::fill(p->value.begin(), p->value.end(), T(0));
                for (int o = 0; o < out; ++o)
                    for (int c = 0; c < 3; ++c)
                        for (int i = 0; i < 49; ++i)
                            p->value[(static_cast<size_t>(o) * 4 + c) * 49 + i] =
                                T(data[(static_cast<size_t>(o) * 3 + c) * 49 + i]);
            } else {
                if (shape != p->shape)
                    throw std::runtime_error("pretrained shape mismatch for " + key);
                for (size_t i = 0; i < data.size(); ++i) p->value[i] = T(data[i]);
            }
        }
    }

    void set_training(bool on) {
        for (auto* bn : bns_) bn->training = on;
    }

    std::vector<std::pair<std::string, std::vector<int>>> manifest() {
        std::vector<std::pair<std::string, std::vector<int>>> m;
        for (auto* p : registry_.items) m.emplace_back(p->name, p->shape);
        return m;
    }

    // x4: normalized 4-channel stack; rgb: raw [0,1] input planes for the
    // decoder skip. Output is (n, 1, H, W) in (0,1).
    nn::Tensor<T> forward(const nn::Tensor<T>& x4, const nn::Tensor<T>& rgb) {
        if (x4.c != cfg_.input_channels) throw std::runtime_error("generator expects 4 channels");
        enc_out_ = encoder.forward(x4);
        nn::Tensor<T> b = aspp.forward(enc_out_.bottleneck);
        return decoder.forward(b, enc_out_.skip_os4, enc_out_.skip_os2, enc_out_.pool_indices, rgb);
    }

    nn::Tensor<T> backward(const nn::Tensor<T>& dalpha) {
        auto g = decoder.backward(dalpha);
        nn::Tensor<T> db = aspp.backward(g.d_bottleneck);
        return encoder.backward(db, g.has_skips ? &g.d_skip4 : nullptr,
                                g.has_skips ? &g.d_skip2 : nullptr);
    }

    Encoder<T> encoder;
    Aspp<T> aspp;
    Decoder<T> decoder;

private:
    GeneratorConfig cfg_;
    nn::ParamRegistry<T> registry_;
    std::vector<nn::BatchNorm2d<T>*> bns_;
    typename Encoder<T>::Output enc_out_;
};

// Writes one sample into batch slot b of the (pre-sized) input tensors.
template <typename T>
void fill_input_slot(nn::Tensor<T>& x4, nn::Tensor<T>& rgb, int b, const RgbImage& image,
                     const Trimap& trimap, const GeneratorConfig& cfg) {
    size_t plane = static_cast<size_t>(image.height) * image.width;
    AlphaMatte tp = trimap_plane(trimap);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i) {
            double v = image.data[c * plane + i];
            rgb.v[(static_cast<size_t>(b) * 3 + c) * plane + i] = T(v);
            if (cfg.normalize_rgb) v = (v - cfg.rgb_mean[c]) / cfg.rgb_std[c];
            x4.v[(static_cast<size_t>(b) * 4 + c) * plane + i] = T(v);
        }
    for (size_t i = 0; i < plane; ++i)
        x4.v[(static_cast<size_t>(b) * 4 + 3) * plane + i] = T(tp.data[i]);
}

// Single-image inference-mode forward (dimensions must be divisible by 32).
template <typename T>
AlphaMatte generator_forward(Generator<T>& g, const RgbImage& image, const Trimap& trimap) {
    if (image.height != trimap.height || image.width != trimap.width)
        throw std::runtime_error("image/trimap dimension mismatch");
    nn::Tensor<T> x4(1, 4, image.height, image.width);
    nn::Tensor<T> rgb(1, 3, image.height, image.width);
    fill_input_slot(x4, rgb, 0, image, trimap, g.config());
    g.set_training(false);
    nn::Tensor<T> y = g.forward(x4, rgb);
    AlphaMatte out(image.height, image.width);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = static_cast<float>(y.v[i]);
    return out;
}

}  // namespace alphagan
