#pragma once

#include <cmath>

#include "nn/tensor.h"

namespace talkie::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    // One update on accumulated gradients; lr_override < 0 keeps cfg lr.
    void step(ParamSet& params, double lr_override = -1.0) {
        ++t_;
        const double lr = lr_override >= 0.0 ? lr_override : cfg_.lr;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (Param* p : params.items) {
            if (!p->trainable) continue;
            if (p->adam_m.size() != p->w.size()) {
                p->adam_m.assign(p->w.size(), 0.0f);
                p->adam_v.assign(p->w.size(), 0.0f);
            }
            for (size_t i = 0; i < p->w.size(); ++i) {
                const double g = p->g[i];
                const double m = cfg_.beta1 * p->adam_m[i] + (1.0 - cfg_.beta1) * g;
                const double v = cfg_.beta2 * p->adam_v[i] + (1.0 - cfg_.beta2) * g * g;
                p->adam_m[i] = static_cast<float>(m);
                p->adam_v[i] = static_cast<float>(v);
                const double mhat = m / bc1;
                const double vhat = v / bc2;
                p->w[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
        }
    }

    int64_t steps_taken() const { return t_; }

  private:
    AdamConfig cfg_;
    int64_t t_ = 0;
};

// Global-norm gradient clip; returns the pre-clip norm.
inline double clip_grad_norm(ParamSet& params, double max_norm) {
    double sq = 0.0;
    for (Param* p : params.items) {
        if (!p->trainable) continue;
        for (float g : p->g) sq += static_cast<double>(g) * g;
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const float s = static_cast<float>(max_norm / norm);
        for (Param* p : params.items) {
            if (!p->trainable) continue;
            for (float& g : p->g) g *= s;
        }
    }
    return norm;
}

}  // namespace talkie::nn
