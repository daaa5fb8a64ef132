#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "drsched/domain.hpp"

namespace drsched {

/// Empirical CVaR at confidence 1 - alpha of equally weighted samples: the
/// mean of the worst alpha-fraction of the mass, with the boundary sample
/// weighted fractionally. Equals inf_t { t + E[(X - t)_+] / alpha }.
inline double empirical_cvar(std::span<const double> samples, double alpha) {
    if (samples.empty()) {
        throw ValidationError("empty sample set");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("alpha outside (0, 1)");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double weight = 1.0 / static_cast<double>(sorted.size());
    double remaining = alpha;
    double acc = 0.0;
    for (const double v : sorted) {
        const double w = std::min(weight, remaining);
        acc += w * v;
        remaining -= w;
        if (remaining <= 0.0) {
            break;
        }
    }
    return acc / alpha;
}

/// Worst-case CVaR over the type-1 Wasserstein ball of radius theta around
/// the samples, for a scalar uncertainty entering with unit coefficient and
/// unbounded support: the empirical CVaR plus theta / alpha. This is the
/// margin by which the planned heat delivery must exceed the forecast.
inline double wc_cvar_margin(std::span<const double> samples, double theta, double alpha) {
    if (!std::isfinite(theta) || theta < 0.0) {
        throw ValidationError("theta must be >= 0");
    }
    return empirical_cvar(samples, alpha) + theta / alpha;
}

} // namespace drsched
