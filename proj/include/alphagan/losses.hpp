#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "alphagan/datapipe.hpp"
#include "alphagan/imgcore.hpp"

namespace alphagan {

struct EpsilonConfig {
    double eps = 1e-6;       // Charbonnier epsilon
    double eps_log = 1e-7;   // probability clamp before logs
};

struct LossReport {
    double l_alpha = 0, l_comp = 0, l_gan_g = 0, l_gan_d = 0, total_g = 0;
};

inline std::string loss_json_line(int64_t step, const LossReport& r, double wall_ms) {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "{\"step\":%lld,\"l_alpha\":%.9g,\"l_comp\":%.9g,\"l_gan_g\":%.9g,"
                  "\"l_gan_d\":%.9g,\"total_g\":%.9g,\"wall_ms\":%.3f}",
                  static_cast<long long>(step), r.l_alpha, r.l_comp, r.l_gan_g, r.l_gan_d,
                  r.total_g, wall_ms);
    return buf;
}

// Charbonnier alpha-prediction loss over the unknown region:
// (1/|U|) sum sqrt((a_p - a_g)^2 + eps^2).
template <typename T>
double alpha_prediction_loss(const T* pred, const float* gt, const uint8_t* unk, size_t n,
                             double eps) {
    double sum = 0;
    size_t cnt = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!unk[i]) continue;
        double d = double(pred[i]) - double(gt[i]);
        sum += std::sqrt(d * d + eps * eps);
        ++cnt;
    }
    if (cnt == 0) throw std::runtime_error("empty unknown region");
    return sum / cnt;
}

// d(loss)/d(pred), scaled by `scale`, accumulated into grad.
template <typename T>
void alpha_prediction_loss_grad(const T* pred, const float* gt, const uint8_t* unk, size_t n,
                                double eps, double scale, T* grad) {
    size_t cnt = 0;
    for (size_t i = 0; i < n; ++i) cnt += unk[i] ? 1 : 0;
    if (cnt == 0) throw std::runtime_error("empty unknown region");
    for (size_t i = 0; i < n; ++i) {
        if (!unk[i]) continue;
        double d = double(pred[i]) - double(gt[i]);
        grad[i] += T(scale * d / (std::sqrt(d * d + eps * eps) * cnt));
    }
}

// Compositional loss: Charbonnier over the RGB recomposite inside the
// unknown region, (1/(3|U|)) sum_c sqrt((C_p - C_g)^2 + eps^2).
template <typename T>
double composition_loss(const T* pred, const TrainingSample& s, const uint8_t* unk, double eps) {
    size_t n = static_cast<size_t>(s.composite.height) * s.composite.width;
    double sum = 0;
    size_t cnt = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!unk[i]) continue;
        ++cnt;
        for (int c = 0; c < 3; ++c) {
            double F = s.foreground.data[c * n + i], B = s.background.data[c * n + i];
            double cp = double(pred[i]) * F + (1.0 - double(pred[i])) * B;
            double d = cp - double(s.composite.data[c * n + i]);
            sum += std::sqrt(d * d + eps * eps);
        }
    }
    if (cnt == 0) throw std::runtime_error("empty unknown region");
    return sum / (3.0 * cnt);
}

template <typename T>
void composition_loss_grad(const T* pred, const TrainingSample& s, const uint8_t* unk, double eps,
                           double scale, T* grad) {
    size_t n = static_cast<size_t>(s.composite.height) * s.composite.width;
    size_t cnt = 0;
    for (size_t i = 0; i < n; ++i) cnt += unk[i] ? 1 : 0;
    if (cnt == 0) throw std::runtime_error("empty unknown region");
    for (size_t i = 0; i < n; ++i) {
        if (!unk[i]) continue;
        double g = 0;
        for (int c = 0; c < 3; ++c) {
            double F = s.foreground.data[c * n + i], B = s.background.data[c * n + i];
            double cp = double(pred[i]) * F + (1.0 - double(pred[i])) * B;
            double d = cp - double(s.composite.data[c * n + i]);
            g += d / std::sqrt(d * d + eps * eps) * (F - B);
        }
        grad[i] += T(scale * g / (3.0 * cnt));
    }
}

inline double clamp_prob(double p, double eps_log) {
    if (p < eps_log) return eps_log;
    if (p > 1.0 - eps_log) return 1.0 - eps_log;
    return p;
}

// Discriminator training loss: negated value of the adversarial objective the
// discriminator maximizes, -(log d_real + log(1 - d_fake)).
inline double gan_loss_d(double d_real, double d_fake, double eps_log = 1e-7) {
    d_real = clamp_prob(d_real, eps_log);
    d_fake = clamp_prob(d_fake, eps_log);
    return -(std::log(d_real) + std::log(1.0 - d_fake));
}

// Generator adversarial term; non-saturating -log d_fake by default, the
// literal minimax form log(1 - d_fake) when `saturating`.
inline double gan_loss_g(double d_fake, bool saturating = false, double eps_log = 1e-7) {
    d_fake = clamp_prob(d_fake, eps_log);
    return saturating ? std::log(1.0 - d_fake) : -std::log(d_fake);
}

// d(gan_loss_g)/d(d_fake); zero in the clamped region.
inline double gan_loss_g_grad(double d_fake, bool saturating = false, double eps_log = 1e-7) {
    if (d_fake < eps_log || d_fake > 1.0 - eps_log) return 0.0;
    return saturating ? -1.0 / (1.0 - d_fake) : -1.0 / d_fake;
}

inline double gan_loss_d_grad_real(double d_real, double eps_log = 1e-7) {
    if (d_real < eps_log || d_real > 1.0 - eps_log) return 0.0;
    return -1.0 / d_real;
}

inline double gan_loss_d_grad_fake(double d_fake, double eps_log = 1e-7) {
    if (d_fake < eps_log || d_fake > 1.0 - eps_log) return 0.0;
    return 1.0 / (1.0 - d_fake);
}

struct LossWeights {
    double alpha = 1.0, comp = 1.0, gan = 1.0;
};

inline LossReport total_generator_loss(double l_alpha, double l_comp, double l_gan_g,
                                       double l_gan_d, const LossWeights& w = {}) {
    LossReport r;
    r.l_alpha = l_alpha;
    r.l_comp = l_comp;
    r.l_gan_g = l_gan_g;
    r.l_gan_d = l_gan_d;
    r.total_g = w.alpha * l_alpha + w.comp * l_comp + w.gan * l_gan_g;
    return r;
}

}  // namespace alphagan
