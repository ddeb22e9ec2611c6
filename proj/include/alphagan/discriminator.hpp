#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "alphagan/datapipe.hpp"
#include "alphagan/imgcore.hpp"
#include "alphagan/nn/layers.hpp"

namespace alphagan {

struct DiscriminatorConfig {
    int base_width = 64;
    int input_channels = 4;
    // Fake composites reuse the sample's own background unless set.
    bool fresh_background = false;
};

// Analytic receptive field of the C64-C128-C256-C512-C1 ladder.
inline int discriminator_receptive_field() {
    const int ks[] = {4, 4, 4, 4, 4};
    const int ss[] = {2, 2, 2, 1, 1};
    int rf = 1;
    for (int i = 4; i >= 0; --i) rf = rf * ss[i] + (ks[i] - ss[i]);
    return rf;
}

// 70x70 patch discriminator over 4-channel composite/trimap stacks.
template <typename T>
class Discriminator {
public:
    explicit Discriminator(const DiscriminatorConfig& cfg = {})
        : cfg_(cfg),
          c1(cfg.input_channels, cfg.base_width, 4, 2, 1, 1, true),
          c2(cfg.base_width, cfg.base_width * 2, 4, 2, 1),
          bn2(cfg.base_width * 2),
          c3(cfg.base_width * 2, cfg.base_width * 4, 4, 2, 1),
          bn3(cfg.base_width * 4),
          c4(cfg.base_width * 4, cfg.base_width * 8, 4, 1, 1),
          bn4(cfg.base_width * 8),
          c5(cfg.base_width * 8, 1, 4, 1, 1, 1, true) {
        if (discriminator_receptive_field() != 70)
            throw std::runtime_error("discriminator ladder receptive field != 70");
        c1.reg(registry_, "d.c1");
        c2.reg(registry_, "d.c2");
        bn2.reg(registry_, "d.bn2");
        c3.reg(registry_, "d.c3");
        bn3.reg(registry_, "d.bn3");
        c4.reg(registry_, "d.c4");
        bn4.reg(registry_, "d.bn4");
        c5.reg(registry_, "d.c5");
    }

    nn::ParamRegistry<T>& params() { return registry_; }

    void init(uint64_t seed) {
        std::mt19937_64 rng(seed);
        c1.init(rng);
        c2.init(rng);
        c3.init(rng);
        c4.init(rng);
        c5.init(rng);
    }

    void set_training(bool on) { bn2.training = bn3.training = bn4.training = on; }

    // Patch probabilities after the sigmoid.
    nn::Tensor<T> forward(const nn::Tensor<T>& stack) {
        if (stack.c != cfg_.input_channels)
            throw std::runtime_error("discriminator expects 4 channels");
        if (stack.h < 70 || stack.w < 70)
            throw std::runtime_error("input smaller than the 70x70 receptive field");
        nn::Tensor<T> f = lr1.forward(c1.forward(stack));
        f = lr2.forward(bn2.forward(c2.forward(f)));
        f = lr3.forward(bn3.forward(c3.forward(f)));
        f = lr4.forward(bn4.forward(c4.forward(f)));
        return sig.forward(c5.forward(f));
    }

    nn::Tensor<T> backward(const nn::Tensor<T>& dscores) {
        nn::Tensor<T> g = c5.backward(sig.backward(dscores));
        g = c4.backward(bn4.backward(lr4.backward(g)));
        g = c3.backward(bn3.backward(lr3.backward(g)));
        g = c2.backward(bn2.backward(lr2.backward(g)));
        return c1.backward(lr1.backward(g));
    }

    static T mean_score(const nn::Tensor<T>& patch_scores) {
        double s = 0;
        for (T v : patch_scores.v) s += v;
        return T(s / patch_scores.size());
    }

    std::vector<std::pair<std::string, std::vector<int>>> manifest() {
        std::vector<std::pair<std::string, std::vector<int>>> m;
        for (auto* p : registry_.items) m.emplace_back(p->name, p->shape);
        return m;
    }

private:
    DiscriminatorConfig cfg_;
    nn::ParamRegistry<T> registry_;
    nn::Conv2d<T> c1, c2, c3, c4, c5;
    nn::BatchNorm2d<T> bn2, bn3, bn4;
    nn::LeakyReLU<T> lr1, lr2, lr3, lr4;
    nn::Sigmoid<T> sig;
};

// real = [composite(fg, bg, alpha_gt); trimap plane].
template <typename T>
void fill_real_stack(nn::Tensor<T>& stack, int b, const TrainingSample& s) {
    RgbImage comp = composite(s.foreground, s.background, s.alpha_gt);
    AlphaMatte tp = trimap_plane(s.trimap);
    size_t plane = comp.plane_size();
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i)
            stack.v[(static_cast<size_t>(b) * 4 + c) * plane + i] = T(comp.data[c * plane + i]);
    for (size_t i = 0; i < plane; ++i)
        stack.v[(static_cast<size_t>(b) * 4 + 3) * plane + i] = T(tp.data[i]);
}

// fake = [composite(fg, bg, alpha_pred); trimap plane]; alpha comes in as a
// tensor slot so gradients can flow back to the generator.
template <typename T>
void fill_fake_stack(nn::Tensor<T>& stack, int b, const TrainingSample& s,
                     const nn::Tensor<T>& alpha_pred, int alpha_slot) {
    size_t plane = s.foreground.plane_size();
    AlphaMatte tp = trimap_plane(s.trimap);
    const T* a = alpha_pred.data() + static_cast<size_t>(alpha_slot) * plane;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i) {
            T v = a[i] * T(s.foreground.data[c * plane + i]) +
                  (T(1) - a[i]) * T(s.background.data[c * plane + i]);
            stack.v[(static_cast<size_t>(b) * 4 + c) * plane + i] = v;
        }
    for (size_t i = 0; i < plane; ++i)
        stack.v[(static_cast<size_t>(b) * 4 + 3) * plane + i] = T(tp.data[i]);
}

// Chain-rule step for fill_fake_stack: folds the gradient at the RGB channels
// of the stack back onto the alpha slot via dC/dalpha = F - B.
template <typename T>
void fake_stack_backward_alpha(const nn::Tensor<T>& dstack, int b, const TrainingSample& s,
                               nn::Tensor<T>& dalpha, int alpha_slot) {
    size_t plane = s.foreground.plane_size();
    T* da = dalpha.data() + static_cast<size_t>(alpha_slot) * plane;
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i) {
            T fb = T(s.foreground.data[c * plane + i]) - T(s.background.data[c * plane + i]);
            da[i] += dstack.v[(static_cast<size_t>(b) * 4 + c) * plane + i] * fb;
        }
}

// Convenience single-sample stack builders.
template <typename T>
nn::Tensor<T> real_stack(const TrainingSample& s) {
    nn::Tensor<T> t(1, 4, s.composite.height, s.composite.width);
    fill_real_stack(t, 0, s);
    return t;
}

template <typename T>
nn::Tensor<T> fake_stack(const TrainingSample& s, const AlphaMatte& alpha_pred) {
    if (alpha_pred.height != s.composite.height || alpha_pred.width != s.composite.width)
        throw std::runtime_error("fake_stack dimension mismatch");
    nn::Tensor<T> a(1, 1, alpha_pred.height, alpha_pred.width);
    for (size_t i = 0; i < alpha_pred.data.size(); ++i) a.v[i] = T(alpha_pred.data[i]);
    nn::Tensor<T> t(1, 4, s.composite.height, s.composite.width);
    fill_fake_stack(t, 0, s, a, 0);
    return t;
}

}  // namespace alphagan
