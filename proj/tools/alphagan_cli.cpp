#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <opencv2/core.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "alphagan/checkpoint.hpp"
#include "alphagan/datapipe.hpp"
#include "alphagan/imgcore.hpp"
#include "alphagan/metrics.hpp"
#include "alphagan/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace alphagan;

namespace {

void apply_thread_cap() {
    const char* env = std::getenv("ALPHAGAN_THREADS");
    if (!env) return;
    int n = std::atoi(env);
    if (n < 1) return;
    cv::setNumThreads(n);
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

void write_effective_config(const std::string& out_dir, const FullConfig& cfg) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "effective_config.json");
    f << config_to_json_string(cfg) << "\n";
}

GeneratorConfig gen_config_from_checkpoint(const std::string& dir) {
    std::ifstream sf(fs::path(dir) / "state.json");
    if (!sf) throw std::runtime_error("missing state.json in " + dir);
    json state = json::parse(sf);
    GeneratorConfig g;
    if (state.contains("config") && state["config"].contains("gen")) {
        const json& jg = state["config"]["gen"];
        g.output_stride = jg.value("output_stride", g.output_stride);
        g.use_aspp = jg.value("use_aspp", g.use_aspp);
        g.use_skips = jg.value("use_skips", g.use_skips);
        g.use_multigrid = jg.value("use_multigrid", g.use_multigrid);
        g.width_multiplier = jg.value("width_multiplier", g.width_multiplier);
        g.input_channels = jg.value("input_channels", g.input_channels);
        g.normalize_rgb = jg.value("normalize_rgb", g.normalize_rgb);
    }
    return g;
}

TrainConfig train_config_from_checkpoint(const std::string& dir) {
    std::ifstream sf(fs::path(dir) / "state.json");
    if (!sf) throw std::runtime_error("missing state.json in " + dir);
    json state = json::parse(sf);
    TrainConfig t;
    if (state.contains("config") && state["config"].contains("train")) {
        const json& jt = state["config"]["train"];
        t.batch_size = jt.value("batch_size", t.batch_size);
        t.steps = jt.value("steps", t.steps);
        t.lr_g = jt.value("lr_g", t.lr_g);
        t.lr_d = jt.value("lr_d", t.lr_d);
        t.adam_beta1 = jt.value("adam_beta1", t.adam_beta1);
        t.adam_beta2 = jt.value("adam_beta2", t.adam_beta2);
        t.d_steps_per_g = jt.value("d_steps_per_g", t.d_steps_per_g);
        t.seed = jt.value("seed", t.seed);
        t.gan_enabled = jt.value("gan_enabled", t.gan_enabled);
        t.checkpoint_every = jt.value("checkpoint_every", t.checkpoint_every);
        t.eps = jt.value("eps", t.eps);
        t.saturating_gan = jt.value("saturating_gan", t.saturating_gan);
        t.weights.alpha = jt.value("w_alpha", t.weights.alpha);
        t.weights.comp = jt.value("w_comp", t.weights.comp);
        t.weights.gan = jt.value("w_gan", t.weights.gan);
    }
    return t;
}

int cmd_compose(const std::string& fg, const std::string& alpha, const std::string& bg,
                const std::string& out, int per_fg, uint64_t seed) {
    build_composition_set(fg, alpha, bg, out, per_fg, seed);
    FullConfig cfg;
    cfg.augment.seed = seed;
    write_effective_config(out, cfg);
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data, const std::string& out,
              const std::string& resume, int64_t steps, int64_t seed, bool no_gan, bool no_aspp,
              bool no_skips, int output_stride,
              const std::vector<std::string>& overrides) {
    FullConfig cfg;
    if (!config_path.empty()) cfg = config_from_json_file(config_path);
    if (steps >= 0) cfg.train.steps = steps;
    if (seed >= 0) {
        cfg.train.seed = static_cast<uint64_t>(seed);
        cfg.augment.seed = static_cast<uint64_t>(seed);
    }
    if (no_gan) cfg.train.gan_enabled = false;
    if (no_aspp) cfg.gen.use_aspp = false;
    if (no_skips) cfg.gen.use_skips = false;
    if (output_stride > 0) cfg.gen.output_stride = output_stride;
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("override must look like section.key=value: " + ov);
        apply_dotted_override(cfg, ov.substr(0, eq), ov.substr(eq + 1));
    }
    cfg.gen.validate();
    cfg.train.validate();

    TrainState st(cfg.gen, cfg.train);
    if (!resume.empty()) {
        load_checkpoint(resume, st);
        st.tcfg.steps = cfg.train.steps;  // resumed runs may extend the horizon
    } else {
        st.init();
    }

    write_effective_config(out, cfg);
    std::ofstream log(fs::path(out) / "train_log.jsonl", st.step > 0 ? std::ios::app
                                                                     : std::ios::trunc);
    AugmentingSource source((fs::path(data) / "fg").string(),
                            (fs::path(data) / "alpha").string(),
                            (fs::path(data) / "bg").string(), cfg.augment);
    train_loop(source, st, out, &log);
    return 0;
}

int cmd_predict(const std::string& weights, const std::string& image_path,
                const std::string& trimap_path, const std::string& out_path, bool no_clamp) {
    GeneratorConfig gcfg = gen_config_from_checkpoint(weights);
    TrainConfig tcfg = train_config_from_checkpoint(weights);
    TrainState st(gcfg, tcfg);
    load_checkpoint(weights, st);

    RgbImage image = load_rgb(image_path);
    Trimap trimap = load_trimap(trimap_path);
    AlphaMatte alpha = predict(image, trimap, st.G, !no_clamp);
    if (fs::path(out_path).has_parent_path())
        fs::create_directories(fs::path(out_path).parent_path());
    save_alpha(alpha, out_path, 16);

    FullConfig cfg;
    cfg.gen = gcfg;
    cfg.train = tcfg;
    write_effective_config(fs::path(out_path).parent_path().string(), cfg);
    return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& gt, const std::string& trimap,
                 const std::string& out, const std::string& scale) {
    if (scale != "raw" && scale != "thousands")
        throw std::runtime_error("--scale must be raw or thousands");
    MetricReport r = evaluate_dirs(pred, gt, trimap);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    fs::create_directories(out);
    bool thousands_scale = scale == "thousands";
    write_report_json(r, (fs::path(out) / "report.json").string(), thousands_scale);
    write_report_csv(r, (fs::path(out) / "report.csv").string(), thousands_scale);
    write_effective_config(out, FullConfig{});
    return 0;
}

int cmd_preview(const std::string& fg, const std::string& alpha, const std::string& bg,
                const std::string& out, int n, uint64_t seed, const AugmentConfig& base) {
    AugmentConfig acfg = base;
    acfg.seed = seed;
    acfg.validate();
    AugmentingSource source(fg, alpha, bg, acfg);
    fs::create_directories(out);
    json manifest;
    manifest["seed"] = seed;
    manifest["samples"] = json::array();
    for (int i = 0; i < n; ++i) {
        TrainingSample s = source.get(static_cast<uint64_t>(i));
        std::string stem = "sample_" + std::to_string(i);
        save_rgb(s.composite, (fs::path(out) / (stem + "_composite.png")).string());
        save_trimap(s.trimap, (fs::path(out) / (stem + "_trimap.png")).string());
        save_alpha(s.alpha_gt, (fs::path(out) / (stem + "_alpha.png")).string(), 8);
        manifest["samples"].push_back(stem);
    }
    std::ofstream mf(fs::path(out) / "manifest.json");
    mf << manifest.dump(2) << "\n";
    FullConfig cfg;
    cfg.augment = acfg;
    write_effective_config(out, cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();
    CLI::App app{"alphagan: adversarially trained natural image matting"};
    app.require_subcommand(1);

    auto* compose = app.add_subcommand("compose", "Build a composited evaluation set");
    std::string c_fg, c_alpha, c_bg, c_out;
    int c_per_fg = 1;
    uint64_t c_seed = 0;
    compose->add_option("--fg", c_fg, "Foreground PNG directory")->required();
    compose->add_option("--alpha", c_alpha, "Ground-truth alpha directory")->required();
    compose->add_option("--bg", c_bg, "Background PNG directory")->required();
    compose->add_option("--out", c_out, "Output directory")->required();
    compose->add_option("--per-fg", c_per_fg, "Composites per foreground");
    compose->add_option("--seed", c_seed, "Master seed");

    auto* train = app.add_subcommand("train", "Train the matting networks");
    std::string t_config, t_data, t_out, t_resume;
    int64_t t_steps = -1, t_seed = -1;
    bool t_no_gan = false, t_no_aspp = false, t_no_skips = false;
    int t_os = 0;
    std::vector<std::string> t_set;
    train->add_option("--config", t_config, "JSON config file");
    train->add_option("--data", t_data, "Data root with fg/, alpha/, bg/")->required();
    train->add_option("--out", t_out, "Output directory")->required();
    train->add_option("--resume", t_resume, "Checkpoint directory to resume from");
    train->add_option("--steps", t_steps, "Total training steps");
    train->add_option("--seed", t_seed, "Master seed");
    train->add_flag("--no-gan", t_no_gan, "Disable the adversarial term");
    train->add_flag("--no-aspp", t_no_aspp, "Disable atrous pyramid pooling");
    train->add_flag("--no-skips", t_no_skips, "Disable decoder skip connections");
    train->add_option("--output-stride", t_os, "Encoder output stride (8 or 16)")
        ->check(CLI::IsMember({8, 16}));
    train->add_option("--set", t_set, "Dotted config override, e.g. train.lr_g=1e-3");

    auto* pred = app.add_subcommand("predict", "Predict an alpha matte");
    std::string p_weights, p_image, p_trimap, p_out;
    bool p_no_clamp = false;
    pred->add_option("--weights", p_weights, "Checkpoint directory")->required();
    pred->add_option("--image", p_image, "Input RGB PNG")->required();
    pred->add_option("--trimap", p_trimap, "Input trimap PNG")->required();
    pred->add_option("--out", p_out, "Output alpha PNG path")->required();
    pred->add_flag("--no-clamp", p_no_clamp, "Keep raw predictions in known regions");

    auto* eval = app.add_subcommand("evaluate", "Score predictions against ground truth");
    std::string e_pred, e_gt, e_trimap, e_out, e_scale = "raw";
    eval->add_option("--pred", e_pred, "Predicted matte directory")->required();
    eval->add_option("--gt", e_gt, "Ground-truth matte directory")->required();
    eval->add_option("--trimap", e_trimap, "Trimap directory")->required();
    eval->add_option("--out", e_out, "Report output directory")->required();
    eval->add_option("--scale", e_scale, "Column scaling: raw or thousands")
        ->check(CLI::IsMember({"raw", "thousands"}));

    auto* preview = app.add_subcommand("preview", "Emit augmented sample triptychs");
    std::string v_fg, v_alpha, v_bg, v_out;
    int v_n = 3;
    uint64_t v_seed = 0;
    int v_size = 320;
    preview->add_option("--fg", v_fg, "Foreground PNG directory")->required();
    preview->add_option("--alpha", v_alpha, "Ground-truth alpha directory")->required();
    preview->add_option("--bg", v_bg, "Background PNG directory")->required();
    preview->add_option("--out", v_out, "Output directory")->required();
    preview->add_option("--n", v_n, "Number of samples");
    preview->add_option("--seed", v_seed, "Master seed");
    preview->add_option("--size", v_size, "Output side length (multiple of 32)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (compose->parsed())
            return cmd_compose(c_fg, c_alpha, c_bg, c_out, c_per_fg, c_seed);
        if (train->parsed())
            return cmd_train(t_config, t_data, t_out, t_resume, t_steps, t_seed, t_no_gan,
                             t_no_aspp, t_no_skips, t_os, t_set);
        if (pred->parsed())
            return cmd_predict(p_weights, p_image, p_trimap, p_out, p_no_clamp);
        if (eval->parsed())
            return cmd_evaluate(e_pred, e_gt, e_trimap, e_out, e_scale);
        if (preview->parsed()) {
            AugmentConfig base;
            base.out_size = v_size;
            base.crop_min = std::min(base.crop_min, v_size);
            base.crop_max = std::max(base.crop_max, base.crop_min);
            return cmd_preview(v_fg, v_alpha, v_bg, v_out, v_n, v_seed, base);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
