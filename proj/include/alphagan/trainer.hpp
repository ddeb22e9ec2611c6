#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "alphagan/datapipe.hpp"
#include "alphagan/discriminator.hpp"
#include "alphagan/generator.hpp"
#include "alphagan/losses.hpp"
#include "alphagan/nn/adam.hpp"

namespace alphagan {

struct TrainConfig {
    int batch_size = 4;
    int64_t steps = 0;
    double lr_g = 1e-4, lr_d = 1e-4;
    double adam_beta1 = 0.5, adam_beta2 = 0.999;
    int d_steps_per_g = 1;
    uint64_t seed = 0;
    bool gan_enabled = true;
    int64_t checkpoint_every = 1000;
    double eps = 1e-6;
    bool saturating_gan = false;
    LossWeights weights;

    void validate() const;
};

struct FullConfig {
    GeneratorConfig gen;
    AugmentConfig augment;
    TrainConfig train;
};

FullConfig config_from_json_file(const std::string& path);
std::string config_to_json_string(const FullConfig& cfg);
// Dotted-key override, e.g. "train.lr_g" = "1e-3".
void apply_dotted_override(FullConfig& cfg, const std::string& key, const std::string& value);

// One logical training stream: the two networks, their optimizers and the
// step counter.
class TrainState {
public:
    TrainState(const GeneratorConfig& gcfg, const TrainConfig& tcfg);

    void init();  // seeds both networks from tcfg.seed

    Generator<float> G;
    Discriminator<float> D;
    nn::Adam<float> opt_g, opt_d;
    int64_t step = 0;
    Rng rng;
    GeneratorConfig gcfg;
    TrainConfig tcfg;
};

// d_steps_per_g discriminator updates followed by one generator update.
// Throws on non-finite losses. Gradients reach the generator only through
// unknown-region pixels.
LossReport train_step(TrainState& st, const std::vector<TrainingSample>& batch);

struct SampleSource {
    virtual ~SampleSource() = default;
    virtual TrainingSample get(uint64_t index) = 0;
};

// Cycles over a fixed in-memory set (overfit fixtures, tests).
class FixedSource : public SampleSource {
public:
    explicit FixedSource(std::vector<TrainingSample> samples) : samples_(std::move(samples)) {}
    TrainingSample get(uint64_t index) override { return samples_[index % samples_.size()]; }

private:
    std::vector<TrainingSample> samples_;
};

// Augmentation-pipeline-backed source over fg/alpha/bg directories; each
// index owns an independent deterministic stream.
class AugmentingSource : public SampleSource {
public:
    AugmentingSource(const std::string& fg_dir, const std::string& alpha_dir,
                     const std::string& bg_dir, const AugmentConfig& cfg);
    TrainingSample get(uint64_t index) override;

private:
    std::vector<std::string> fg_paths_, alpha_paths_, bg_paths_;
    AugmentConfig cfg_;
};

// Runs tcfg.steps steps, emitting one JSON line per step to `log` and
// checkpointing every checkpoint_every steps into out_dir.
void train_loop(SampleSource& source, TrainState& st, const std::string& out_dir,
                std::ostream* log);

void save_checkpoint(TrainState& st, const std::string& dir);
// Refuses to load when the architecture fingerprint differs.
void load_checkpoint(const std::string& dir, TrainState& st);

// Reflect-pads to the next multiple of 32, runs the generator and crops
// back; clamp_known overwrites known trimap regions with exact 0/1.
AlphaMatte predict(const RgbImage& image, const Trimap& trimap, Generator<float>& G,
                   bool clamp_known = true);

}  // namespace alphagan
