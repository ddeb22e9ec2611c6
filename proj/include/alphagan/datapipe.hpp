#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "alphagan/imgcore.hpp"

namespace alphagan {

struct SourceItem {
    RgbImage foreground;
    AlphaMatte alpha;  // same dimensions as foreground
};

struct TrainingSample {
    RgbImage composite;
    Trimap trimap;
    AlphaMatte alpha_gt;
    RgbImage foreground;
    RgbImage background;
};

struct AugmentConfig {
    double rotation_std_deg = 5.0;
    int dilation_kmin = 2;
    int dilation_kmax = 20;
    int crop_min = 320;
    int crop_max = 720;
    int out_size = 320;
    double flip_prob = 0.5;
    uint64_t seed = 0;

    void validate() const;  // throws on violated invariants
};

using Rng = std::mt19937_64;

// Derives an independent per-sample stream from a master seed (splitmix64).
Rng sample_rng(uint64_t master_seed, uint64_t sample_index);

// I = alpha*F + (1-alpha)*B per channel, clamped to [0,1].
RgbImage composite(const RgbImage& fg, const RgbImage& bg, const AlphaMatte& alpha);

// Rotates foreground and alpha about the image center, bilinear sampling,
// out-of-bounds reads 0. Output dimensions unchanged.
SourceItem rotate_fg_alpha(const SourceItem& item, double degrees);

// Trimap from alpha: UNKNOWN = dilation of the fractional set {0<a<1} with a
// k x k square element (hard-edge fallback when the set is empty), FOREGROUND
// = {a=1} minus UNKNOWN, BACKGROUND = {a=0} minus UNKNOWN.
Trimap synthesize_trimap(const AlphaMatte& alpha, int k);

struct CropWindow {
    int y0 = 0, x0 = 0, size = 0;
};

// Picks the window: center uniform over unknown pixels, side `size` clamped
// (shifted) to image bounds. Shrinks size to min(H,W) with a warning if needed.
CropWindow choose_crop(const Trimap& trimap, int size, Rng& rng);

RgbImage crop(const RgbImage& img, const CropWindow& w);
AlphaMatte crop(const AlphaMatte& a, const CropWindow& w);
Trimap crop(const Trimap& t, const CropWindow& w);

// Bilinear for real planes, nearest-neighbor for trimaps.
RgbImage resize_bilinear(const RgbImage& img, int out_h, int out_w);
AlphaMatte resize_bilinear(const AlphaMatte& a, int out_h, int out_w);
Trimap resize_nearest(const Trimap& t, int out_h, int out_w);

RgbImage hflip(const RgbImage& img);
AlphaMatte hflip(const AlphaMatte& a);
Trimap hflip(const Trimap& t);

// Aspect-filling center crop + bilinear resize of a background to (h, w).
RgbImage prepare_background(const RgbImage& bg, int h, int w);

// Full augmentation pipeline: rotate, trimap synthesis, unknown-centered
// crop, resize, flip, composite. Deterministic in (inputs, cfg, rng state).
TrainingSample make_training_sample(const SourceItem& item, const RgbImage& bg,
                                    const AugmentConfig& cfg, Rng& rng);

// Composition-1k-style test set: per_fg composites per foreground at native
// size, deterministic background and kernel draws, PNG output + manifest.json.
void build_composition_set(const std::string& fg_dir, const std::string& alpha_dir,
                           const std::string& bg_dir, const std::string& out_dir,
                           int per_fg, uint64_t seed);

}  // namespace alphagan
