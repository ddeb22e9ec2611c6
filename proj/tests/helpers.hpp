#pragma once

#include <cmath>
#include <random>

#include "alphagan/datapipe.hpp"
#include "alphagan/imgcore.hpp"

namespace testutil {

using alphagan::AlphaMatte;
using alphagan::RgbImage;
using alphagan::Rng;
using alphagan::SourceItem;
using alphagan::TrainingSample;

// Soft elliptical blob: 0 far from the center, 1 inside, a fractional band
// between. Guarantees all three trimap regions exist for reasonable sizes.
inline AlphaMatte random_blob_alpha(int h, int w, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double cy = h * (0.35 + 0.3 * u(rng)), cx = w * (0.35 + 0.3 * u(rng));
    double ry = h * (0.15 + 0.1 * u(rng)), rx = w * (0.15 + 0.1 * u(rng));
    double band = 0.25 + 0.25 * u(rng);
    AlphaMatte a(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double d = std::sqrt(((y - cy) / ry) * ((y - cy) / ry) +
                                 ((x - cx) / rx) * ((x - cx) / rx));
            double v = (1.0 + band - d) / band;
            a.at(y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    return a;
}

inline RgbImage random_smooth_rgb(int h, int w, Rng& rng) {
    std::uniform_real_distribution<float> u(0.f, 1.f);
    RgbImage img(h, w);
    for (int c = 0; c < 3; ++c) {
        float a = u(rng), b = u(rng), base = u(rng) * 0.5f;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float v = base + 0.5f * (a * y / h + b * x / w);
                img.at(c, y, x) = std::clamp(v, 0.f, 1.f);
            }
    }
    return img;
}

inline TrainingSample make_synthetic_sample(int size, Rng& rng, int dilation_k = 6) {
    TrainingSample s;
    s.alpha_gt = random_blob_alpha(size, size, rng);
    s.foreground = random_smooth_rgb(size, size, rng);
    s.background = random_smooth_rgb(size, size, rng);
    s.trimap = alphagan::synthesize_trimap(s.alpha_gt, dilation_k);
    s.composite = alphagan::composite(s.foreground, s.background, s.alpha_gt);
    return s;
}

}  // namespace testutil
