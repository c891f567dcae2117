#pragma once

// Independent gradient oracle: central finite differences in double precision.
//
// This file is the reference that the reverse-mode engine is tested against.
// It is deliberately self-contained — it knows nothing about tapes or nodes;
// it only perturbs a flat parameter vector and re-evaluates a scalar loss.
// Written and frozen before the autodiff implementation.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace fd_oracle {

// d loss / d x[i]  ≈  (f(x+h e_i) - f(x-h e_i)) / 2h
inline std::vector<double> gradient(std::function<double(const std::vector<double>&)> f,
                                    std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

struct Mismatch {
    size_t index = 0;
    double analytic = 0.0, numeric = 0.0, rel = 0.0;
    bool ok = true;
};

// Element-wise comparison: relative error ≤ rel_tol, with an absolute floor
// for entries near zero where relative error is meaningless.
inline Mismatch compare(const std::vector<double>& analytic, const std::vector<double>& numeric,
                        double rel_tol = 1e-5, double abs_floor = 1e-8) {
    Mismatch worst;
    worst.rel = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i], n = numeric[i];
        const double diff = std::fabs(a - n);
        if (diff <= abs_floor) continue;
        const double rel = diff / std::max(std::fabs(a), std::fabs(n));
        if (rel > worst.rel) {
            worst = {i, a, n, rel, rel <= rel_tol};
        }
    }
    worst.ok = worst.rel <= rel_tol;
    return worst;
}

inline std::string describe(const Mismatch& m) {
    return "worst index " + std::to_string(m.index) + ": analytic=" + std::to_string(m.analytic) +
           " numeric=" + std::to_string(m.numeric) + " rel=" + std::to_string(m.rel);
}

}  // namespace fd_oracle
