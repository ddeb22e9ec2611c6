#include "alphagan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "alphagan/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace alphagan {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
    if (lr_g <= 0 || lr_d <= 0) throw std::runtime_error("learning rates must be positive");
    if (d_steps_per_g < 1) throw std::runtime_error("d_steps_per_g must be >= 1");
    if (eps <= 0) throw std::runtime_error("eps must be positive");
}

TrainState::TrainState(const GeneratorConfig& gcfg_, const TrainConfig& tcfg_)
    : G(gcfg_), D(), gcfg(gcfg_), tcfg(tcfg_) {
    tcfg.validate();
    opt_g.lr = tcfg.lr_g;
    opt_g.beta1 = tcfg.adam_beta1;
    opt_g.beta2 = tcfg.adam_beta2;
    opt_d.lr = tcfg.lr_d;
    opt_d.beta1 = tcfg.adam_beta1;
    opt_d.beta2 = tcfg.adam_beta2;
    rng.seed(tcfg.seed);
}

void TrainState::init() {
    G.init(tcfg.seed);
    D.init(tcfg.seed + 1);
}

namespace {

void check_finite(double v, const char* component, int64_t step) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("non-finite ") + component + " at step " +
                                 std::to_string(step));
}

// Per-sample mean patch score of a (B,1,h,w) score tensor.
std::vector<double> per_sample_means(const nn::Tensor<float>& scores) {
    size_t plane = static_cast<size_t>(scores.h) * scores.w;
    std::vector<double> out(scores.n, 0.0);
    for (int b = 0; b < scores.n; ++b) {
        double s = 0;
        const float* p = scores.data() + static_cast<size_t>(b) * plane;
        for (size_t i = 0; i < plane; ++i) s += p[i];
        out[b] = s / plane;
    }
    return out;
}

}  // namespace

LossReport train_step(TrainState& st, const std::vector<TrainingSample>& batch) {
    if (batch.empty()) throw std::runtime_error("empty batch");
    const int B = static_cast<int>(batch.size());
    const int H = batch[0].composite.height, W = batch[0].composite.width;
    const size_t plane = static_cast<size_t>(H) * W;
    const double eps = st.tcfg.eps;

    nn::Tensor<float> x4(B, 4, H, W), rgb(B, 3, H, W);
    std::vector<std::vector<uint8_t>> unk(B);
    for (int b = 0; b < B; ++b) {
        fill_input_slot(x4, rgb, b, batch[b].composite, batch[b].trimap, st.G.config());
        unk[b] = unk_mask(batch[b].trimap).bits;
    }

    st.G.set_training(true);
    nn::Tensor<float> alpha_pred = st.G.forward(x4, rgb);

    // Known regions carry the ground truth; gradients can only enter through
    // the unknown region.
    nn::Tensor<float> alpha_m = alpha_pred;
    for (int b = 0; b < B; ++b)
        for (size_t i = 0; i < plane; ++i)
            if (!unk[b][i]) alpha_m.v[b * plane + i] = batch[b].alpha_gt.data[i];

    double l_gan_d = 0, l_gan_g = 0;
    nn::Tensor<float> dalpha(B, 1, H, W);

    if (st.tcfg.gan_enabled) {
        st.D.set_training(true);
        size_t grid = 0;
        for (int ds = 0; ds < st.tcfg.d_steps_per_g; ++ds) {
            st.D.params().zero_grad();

            nn::Tensor<float> real(B, 4, H, W);
            for (int b = 0; b < B; ++b) fill_real_stack(real, b, batch[b]);
            nn::Tensor<float> rs = st.D.forward(real);
            grid = static_cast<size_t>(rs.h) * rs.w;
            std::vector<double> dr = per_sample_means(rs);
            nn::Tensor<float> drs(rs.n, 1, rs.h, rs.w);
            for (int b = 0; b < B; ++b) {
                float g = static_cast<float>(gan_loss_d_grad_real(dr[b]) / (grid * B));
                for (size_t i = 0; i < grid; ++i) drs.v[b * grid + i] = g;
            }
            st.D.backward(drs);

            nn::Tensor<float> fake(B, 4, H, W);
            for (int b = 0; b < B; ++b) fill_fake_stack(fake, b, batch[b], alpha_m, b);
            nn::Tensor<float> fsc = st.D.forward(fake);
            std::vector<double> df = per_sample_means(fsc);
            nn::Tensor<float> dfs(fsc.n, 1, fsc.h, fsc.w);
            for (int b = 0; b < B; ++b) {
                float g = static_cast<float>(gan_loss_d_grad_fake(df[b]) / (grid * B));
                for (size_t i = 0; i < grid; ++i) dfs.v[b * grid + i] = g;
            }
            st.D.backward(dfs);

            l_gan_d = 0;
            for (int b = 0; b < B; ++b) l_gan_d += gan_loss_d(dr[b], df[b]) / B;
            check_finite(l_gan_d, "l_gan_d", st.step);
            st.opt_d.step(st.D.params());
        }

        // Generator adversarial term against the freshly updated D.
        st.D.params().zero_grad();
        nn::Tensor<float> fake(B, 4, H, W);
        for (int b = 0; b < B; ++b) fill_fake_stack(fake, b, batch[b], alpha_m, b);
        nn::Tensor<float> fsc = st.D.forward(fake);
        grid = static_cast<size_t>(fsc.h) * fsc.w;
        std::vector<double> df = per_sample_means(fsc);
        nn::Tensor<float> dfs(fsc.n, 1, fsc.h, fsc.w);
        for (int b = 0; b < B; ++b) {
            l_gan_g += gan_loss_g(df[b], st.tcfg.saturating_gan) / B;
            float g = static_cast<float>(st.tcfg.weights.gan *
                                         gan_loss_g_grad(df[b], st.tcfg.saturating_gan) /
                                         (grid * B));
            for (size_t i = 0; i < grid; ++i) dfs.v[b * grid + i] = g;
        }
        check_finite(l_gan_g, "l_gan_g", st.step);
        nn::Tensor<float> dstack = st.D.backward(dfs);
        for (int b = 0; b < B; ++b) fake_stack_backward_alpha(dstack, b, batch[b], dalpha, b);
    }

    double l_alpha = 0, l_comp = 0;
    for (int b = 0; b < B; ++b) {
        const float* pr = alpha_m.data() + static_cast<size_t>(b) * plane;
        float* gr = dalpha.data() + static_cast<size_t>(b) * plane;
        l_alpha += alpha_prediction_loss(pr, batch[b].alpha_gt.data.data(), unk[b].data(),
                                         plane, eps) / B;
        alpha_prediction_loss_grad(pr, batch[b].alpha_gt.data.data(), unk[b].data(), plane, eps,
                                   st.tcfg.weights.alpha / B, gr);
        l_comp += composition_loss(pr, batch[b], unk[b].data(), eps) / B;
        composition_loss_grad(pr, batch[b], unk[b].data(), eps, st.tcfg.weights.comp / B, gr);
    }
    check_finite(l_alpha, "l_alpha", st.step);
    check_finite(l_comp, "l_comp", st.step);

    // d(alpha_m)/d(alpha_pred) is the unknown-region indicator.
    for (int b = 0; b < B; ++b)
        for (size_t i = 0; i < plane; ++i)
            if (!unk[b][i]) dalpha.v[b * plane + i] = 0.f;

    st.G.params().zero_grad();
    st.G.backward(dalpha);
    st.opt_g.step(st.G.params());

    LossReport r = total_generator_loss(l_alpha, l_comp, st.tcfg.gan_enabled ? l_gan_g : 0.0,
                                        l_gan_d, st.tcfg.weights);
    ++st.step;
    return r;
}

AugmentingSource::AugmentingSource(const std::string& fg_dir, const std::string& alpha_dir,
                                   const std::string& bg_dir, const AugmentConfig& cfg)
    : cfg_(cfg) {
    cfg_.validate();
    auto list = [](const std::string& dir) {
        std::vector<std::string> out;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".png")
                out.push_back(e.path().string());
        std::sort(out.begin(), out.end());
        if (out.empty()) throw std::runtime_error("no PNG files in " + dir);
        return out;
    };
    fg_paths_ = list(fg_dir);
    alpha_paths_ = list(alpha_dir);
    bg_paths_ = list(bg_dir);
    if (fg_paths_.size() != alpha_paths_.size())
        throw std::runtime_error("foreground/alpha directories do not align");
}

TrainingSample AugmentingSource::get(uint64_t index) {
    Rng rng = sample_rng(cfg_.seed, index);
    size_t fi = std::uniform_int_distribution<size_t>(0, fg_paths_.size() - 1)(rng);
    size_t bi = std::uniform_int_distribution<size_t>(0, bg_paths_.size() - 1)(rng);
    SourceItem item{load_rgb(fg_paths_[fi]), load_alpha(alpha_paths_[fi])};
    RgbImage bg = load_rgb(bg_paths_[bi]);
    return make_training_sample(item, bg, cfg_, rng);
}

void train_loop(SampleSource& source, TrainState& st, const std::string& out_dir,
                std::ostream* log) {
    fs::create_directories(out_dir);
    while (st.step < st.tcfg.steps) {
        std::vector<TrainingSample> batch;
        for (int b = 0; b < st.tcfg.batch_size; ++b)
            batch.push_back(source.get(static_cast<uint64_t>(st.step) * st.tcfg.batch_size + b));
        auto t0 = std::chrono::steady_clock::now();
        LossReport r = train_step(st, batch);
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0).count();
        if (log) (*log) << loss_json_line(st.step, r, ms) << "\n" << std::flush;
        if (st.tcfg.checkpoint_every > 0 && st.step % st.tcfg.checkpoint_every == 0 &&
            st.step < st.tcfg.steps)
            save_checkpoint(st, (fs::path(out_dir) / ("ckpt_" + std::to_string(st.step))).string());
    }
    save_checkpoint(st, (fs::path(out_dir) / "checkpoint").string());
}

namespace {

json gen_config_json(const GeneratorConfig& g) {
    return json{{"output_stride", g.output_stride},
                {"use_aspp", g.use_aspp},
                {"use_skips", g.use_skips},
                {"use_multigrid", g.use_multigrid},
                {"width_multiplier", g.width_multiplier},
                {"input_channels", g.input_channels},
                {"normalize_rgb", g.normalize_rgb}};
}

json train_config_json(const TrainConfig& t) {
    return json{{"batch_size", t.batch_size},
                {"steps", t.steps},
                {"lr_g", t.lr_g},
                {"lr_d", t.lr_d},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"d_steps_per_g", t.d_steps_per_g},
                {"seed", t.seed},
                {"gan_enabled", t.gan_enabled},
                {"checkpoint_every", t.checkpoint_every},
                {"eps", t.eps},
                {"saturating_gan", t.saturating_gan},
                {"w_alpha", t.weights.alpha},
                {"w_comp", t.weights.comp},
                {"w_gan", t.weights.gan}};
}

json augment_config_json(const AugmentConfig& a) {
    return json{{"rotation_std_deg", a.rotation_std_deg},
                {"dilation_kmin", a.dilation_kmin},
                {"dilation_kmax", a.dilation_kmax},
                {"crop_min", a.crop_min},
                {"crop_max", a.crop_max},
                {"out_size", a.out_size},
                {"flip_prob", a.flip_prob},
                {"seed", a.seed}};
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void gen_config_from(const json& j, GeneratorConfig& g) {
    get_if(j, "output_stride", g.output_stride);
    get_if(j, "use_aspp", g.use_aspp);
    get_if(j, "use_skips", g.use_skips);
    get_if(j, "use_multigrid", g.use_multigrid);
    get_if(j, "width_multiplier", g.width_multiplier);
    get_if(j, "input_channels", g.input_channels);
    get_if(j, "normalize_rgb", g.normalize_rgb);
}

void train_config_from(const json& j, TrainConfig& t) {
    get_if(j, "batch_size", t.batch_size);
    get_if(j, "steps", t.steps);
    get_if(j, "lr_g", t.lr_g);
    get_if(j, "lr_d", t.lr_d);
    get_if(j, "adam_beta1", t.adam_beta1);
    get_if(j, "adam_beta2", t.adam_beta2);
    get_if(j, "d_steps_per_g", t.d_steps_per_g);
    get_if(j, "seed", t.seed);
    get_if(j, "gan_enabled", t.gan_enabled);
    get_if(j, "checkpoint_every", t.checkpoint_every);
    get_if(j, "eps", t.eps);
    get_if(j, "saturating_gan", t.saturating_gan);
    get_if(j, "w_alpha", t.weights.alpha);
    get_if(j, "w_comp", t.weights.comp);
    get_if(j, "w_gan", t.weights.gan);
}

void augment_config_from(const json& j, AugmentConfig& a) {
    get_if(j, "rotation_std_deg", a.rotation_std_deg);
    get_if(j, "dilation_kmin", a.dilation_kmin);
    get_if(j, "dilation_kmax", a.dilation_kmax);
    get_if(j, "crop_min", a.crop_min);
    get_if(j, "crop_max", a.crop_max);
    get_if(j, "out_size", a.out_size);
    get_if(j, "flip_prob", a.flip_prob);
    get_if(j, "seed", a.seed);
}

}  // namespace

FullConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j = json::parse(in);
    FullConfig cfg;
    if (j.contains("gen")) gen_config_from(j["gen"], cfg.gen);
    if (j.contains("augment")) augment_config_from(j["augment"], cfg.augment);
    if (j.contains("train")) train_config_from(j["train"], cfg.train);
    return cfg;
}

std::string config_to_json_string(const FullConfig& cfg) {
    json j{{"gen", gen_config_json(cfg.gen)},
           {"augment", augment_config_json(cfg.augment)},
           {"train", train_config_json(cfg.train)}};
    return j.dump(2);
}

void apply_dotted_override(FullConfig& cfg, const std::string& key, const std::string& value) {
    auto dot = key.find('.');
    if (dot == std::string::npos) throw std::runtime_error("expected dotted key, got " + key);
    std::string section = key.substr(0, dot), field = key.substr(dot + 1);
    json patch{{field, json::parse(value, nullptr, false)}};
    if (patch[field].is_discarded()) patch[field] = value;  // bare string value
    if (section == "gen")
        gen_config_from(patch, cfg.gen);
    else if (section == "train")
        train_config_from(patch, cfg.train);
    else if (section == "augment")
        augment_config_from(patch, cfg.augment);
    else
        throw std::runtime_error("unknown config section " + section);
}

void save_checkpoint(TrainState& st, const std::string& dir) {
    std::vector<TensorEntry> tensors;
    auto add_params = [&tensors](nn::ParamRegistry<float>& reg) {
        for (auto* p : reg.items) tensors.push_back({p->name, p->shape, p->value});
    };
    add_params(st.G.params());
    add_params(st.D.params());
    auto add_moments = [&tensors](nn::Adam<float>& opt, nn::ParamRegistry<float>& reg,
                                  const std::string& prefix) {
        for (auto* p : reg.items) {
            if (!p->trainable) continue;
            auto& m = opt.m[p->name];
            auto& v = opt.v[p->name];
            if (m.size() != p->size()) m.assign(p->size(), 0.f);
            if (v.size() != p->size()) v.assign(p->size(), 0.f);
            tensors.push_back({prefix + ".m." + p->name, p->shape, m});
            tensors.push_back({prefix + ".v." + p->name, p->shape, v});
        }
    };
    add_moments(st.opt_g, st.G.params(), "adam_g");
    add_moments(st.opt_d, st.D.params(), "adam_d");
    write_tensor_archive(dir, tensors);

    auto model_manifest = st.G.manifest();
    auto dm = st.D.manifest();
    model_manifest.insert(model_manifest.end(), dm.begin(), dm.end());
    std::ostringstream rngs;
    rngs << st.rng;
    json state{{"step", st.step},
               {"adam_t_g", st.opt_g.t},
               {"adam_t_d", st.opt_d.t},
               {"rng", rngs.str()},
               {"manifest_hash", manifest_hash(model_manifest)},
               {"config", {{"gen", gen_config_json(st.gcfg)}, {"train", train_config_json(st.tcfg)}}}};
    std::ofstream out(fs::path(dir) / "state.json");
    out << state.dump(2) << "\n";
}

void load_checkpoint(const std::string& dir, TrainState& st) {
    std::ifstream sf(fs::path(dir) / "state.json");
    if (!sf) throw std::runtime_error("missing state.json in " + dir);
    json state = json::parse(sf);

    auto model_manifest = st.G.manifest();
    auto dm = st.D.manifest();
    model_manifest.insert(model_manifest.end(), dm.begin(), dm.end());
    if (state.at("manifest_hash").get<uint32_t>() != manifest_hash(model_manifest))
        throw std::runtime_error("checkpoint architecture does not match configuration");

    TensorMap tensors = read_tensor_archive(dir);
    auto load_params = [&tensors](nn::ParamRegistry<float>& reg) {
        for (auto* p : reg.items) {
            auto it = tensors.find(p->name);
            if (it == tensors.end()) throw std::runtime_error("checkpoint missing " + p->name);
            if (it->second.first != p->shape)
                throw std::runtime_error("checkpoint shape mismatch for " + p->name);
            p->value = it->second.second;
        }
    };
    load_params(st.G.params());
    load_params(st.D.params());
    auto load_moments = [&tensors](nn::Adam<float>& opt, nn::ParamRegistry<float>& reg,
                                   const std::string& prefix) {
        for (auto* p : reg.items) {
            if (!p->trainable) continue;
            auto mi = tensors.find(prefix + ".m." + p->name);
            auto vi = tensors.find(prefix + ".v." + p->name);
            if (mi == tensors.end() || vi == tensors.end())
                throw std::runtime_error("checkpoint missing optimizer state for " + p->name);
            opt.m[p->name] = mi->second.second;
            opt.v[p->name] = vi->second.second;
        }
    };
    load_moments(st.opt_g, st.G.params(), "adam_g");
    load_moments(st.opt_d, st.D.params(), "adam_d");

    st.step = state.at("step");
    st.opt_g.t = state.at("adam_t_g");
    st.opt_d.t = state.at("adam_t_d");
    std::istringstream rngs(state.at("rng").get<std::string>());
    rngs >> st.rng;
}

namespace {

inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

}  // namespace

AlphaMatte predict(const RgbImage& image, const Trimap& trimap, Generator<float>& G,
                   bool clamp_known) {
    if (image.height != trimap.height || image.width != trimap.width)
        throw std::runtime_error("image/trimap dimension mismatch");
    int H = image.height, W = image.width;
    int PH = (H + 31) / 32 * 32, PW = (W + 31) / 32 * 32;

    RgbImage pimg(PH, PW);
    Trimap ptri(PH, PW);
    for (int y = 0; y < PH; ++y) {
        int sy = reflect101(y, H);
        for (int x = 0; x < PW; ++x) {
            int sx = reflect101(x, W);
            for (int c = 0; c < 3; ++c) pimg.at(c, y, x) = image.at(c, sy, sx);
            ptri.at(y, x) = trimap.at(sy, sx);
        }
    }
    AlphaMatte padded = generator_forward(G, pimg, ptri);
    AlphaMatte out(H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            float v = padded.at(y, x);
            if (clamp_known) {
                if (trimap.at(y, x) == TriLabel::Foreground) v = 1.f;
                else if (trimap.at(y, x) == TriLabel::Background) v = 0.f;
            }
            out.at(y, x) = v;
        }
    return out;
}

}  // namespace alphagan
