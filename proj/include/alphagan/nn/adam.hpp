#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "alphagan/nn/tensor.hpp"

namespace alphagan::nn {

// Adaptive-moment gradient descent over a parameter registry. Moment vectors
// are keyed by parameter name so they survive checkpointing.
template <typename T>
class Adam {
public:
    double lr = 1e-4, beta1 = 0.5, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    std::unordered_map<std::string, std::vector<T>> m, v;

    void step(ParamRegistry<T>& reg) {
        ++t;
        double bc1 = 1.0 - std::pow(beta1, double(t));
        double bc2 = 1.0 - std::pow(beta2, double(t));
        for (auto* p : reg.items) {
            if (!p->trainable) continue;
            auto& pm = m[p->name];
            auto& pv = v[p->name];
            if (pm.size() != p->size()) pm.assign(p->size(), T(0));
            if (pv.size() != p->size()) pv.assign(p->size(), T(0));
            for (size_t i = 0; i < p->size(); ++i) {
                double g = p->grad[i];
                pm[i] = T(beta1 * pm[i] + (1 - beta1) * g);
                pv[i] = T(beta2 * pv[i] + (1 - beta2) * g * g);
                double mhat = pm[i] / bc1, vhat = pv[i] / bc2;
                p->value[i] -= T(lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }
};

}  // namespace alphagan::nn
