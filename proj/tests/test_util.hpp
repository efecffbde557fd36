#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

// Shared helpers for the test suites. The finite-difference oracle here is
// intentionally independent of the tape: it only needs a loss callback over
// a flat parameter vector.

namespace testutil {

/// Central finite differences with step h (default 1e-6).
inline std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f, std::vector<double> x,
    double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
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

/// Relative error with a unit floor, as in common gradient-check suites.
inline double rel_err(double analytic, double numeric) {
    const double denom = std::max(1.0, std::max(std::abs(analytic), std::abs(numeric)));
    return std::abs(analytic - numeric) / denom;
}

inline double max_rel_err(std::span<const double> analytic,
                          std::span<const double> numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i)
        worst = std::max(worst, rel_err(analytic[i], numeric[i]));
    return worst;
}

}  // namespace testutil
