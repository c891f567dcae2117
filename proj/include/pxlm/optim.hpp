#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pxlm/common.hpp"

namespace pxlm {

// A named parameter tensor with its gradient accumulator.
template <class S>
struct ParamTensor {
    std::string name;
    std::vector<int> dims;
    std::vector<S> w;
    std::vector<S> g;

    void init_shape(std::string n, std::vector<int> d) {
        name = std::move(n);
        dims = std::move(d);
        size_t total = 1;
        for (int x : dims) total *= static_cast<size_t>(x);
        w.assign(total, S(0));
        g.assign(total, S(0));
    }
    size_t size() const { return w.size(); }
};

// Cosine schedule with linear warmup:
//   step <= warmup:  lr_max * step / warmup          (0 at step 0)
//   else:            lr_min + (lr_max-lr_min)/2 * (1 + cos(pi * progress))
//   step >= total:   lr_min
// The two pieces agree at the warmup boundary (progress 0 gives lr_max).
struct Schedule {
    double lr_max = 3e-4;
    double lr_min = 3e-6;
    uint64_t warmup_steps = 2000;
    uint64_t total_steps = 100000;

    double lr_at(uint64_t step) const {
        if (warmup_steps > 0 && step <= warmup_steps)
            return lr_max * static_cast<double>(step) / static_cast<double>(warmup_steps);
        if (step >= total_steps) return lr_min;
        const double progress = static_cast<double>(step - warmup_steps) /
                                static_cast<double>(total_steps - warmup_steps);
        return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * progress));
    }
};

// AdamW with decoupled multiplicative weight decay: each step first shrinks
// the parameter by (1 - lr*wd), then applies the bias-corrected Adam update.
// Decay therefore acts even when the gradient is exactly zero.
template <class S>
class AdamW {
  public:
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay = 0.01;
    uint64_t t = 0;  // completed steps

    void attach(const std::vector<ParamTensor<S>*>& params) {
        m_.clear();
        v_.clear();
        for (auto* p : params) {
            m_.emplace_back(p->size(), S(0));
            v_.emplace_back(p->size(), S(0));
        }
    }

    void step(double lr, const std::vector<ParamTensor<S>*>& params) {
        if (m_.size() != params.size()) throw NumericError("AdamW: attach() before step()");
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        const S decay = static_cast<S>(1.0 - lr * weight_decay);
        for (size_t pi = 0; pi < params.size(); ++pi) {
            auto& p = *params[pi];
            auto& m = m_[pi];
            auto& v = v_[pi];
            for (size_t i = 0; i < p.size(); ++i) {
                const S g = p.g[i];
                m[i] = static_cast<S>(beta1) * m[i] + static_cast<S>(1.0 - beta1) * g;
                v[i] = static_cast<S>(beta2) * v[i] + static_cast<S>(1.0 - beta2) * g * g;
                const double mhat = static_cast<double>(m[i]) / bc1;
                const double vhat = static_cast<double>(v[i]) / bc2;
                p.w[i] = p.w[i] * decay - static_cast<S>(lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }

    // slot access for checkpointing
    std::vector<std::vector<S>>& m() { return m_; }
    std::vector<std::vector<S>>& v() { return v_; }

  private:
    std::vector<std::vector<S>> m_, v_;
};

// Mean absolute value — the gradient magnitude statistic used to balance the
// two training losses.
template <class S>
double grad_scale(const std::vector<S>& g) {
    if (g.empty()) return 0.0;
    double s = 0.0;
    for (S x : g) s += std::fabs(static_cast<double>(x));
    return s / static_cast<double>(g.size());
}

// Ratio of the reconstruction gradient scale to the adversarial gradient
// scale; multiplying the adversarial loss by this brings both gradients to a
// comparable magnitude. delta guards the division.
inline double lambda_auto(double scale_rec, double scale_pcaa, double delta = 1e-8) {
    return scale_rec / (scale_pcaa + delta);
}

}  // namespace pxlm
