#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pacmcts {

/// Lower real branch W_{-1}(x) of the Lambert W function, defined for
/// x in [-1/e, 0). Returns w <= -1 with w * exp(w) == x.
///
/// The starting point is the branch-point series near -1/e and the
/// asymptotic expansion ln(-x) - ln(-ln(-x)) elsewhere; Halley's iteration
/// then runs to a relative step below `rel_tol`.
inline double lambert_w_minus1(double x, double rel_tol = 1e-12) {
    constexpr double inv_e = 1.0 / std::numbers::e;
    if (!(x >= -inv_e) || !(x < 0.0)) {
        // Allow a few ulps of slack below -1/e from callers that computed x.
        if (x < -inv_e && x > -inv_e * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
            return -1.0;
        }
        throw std::domain_error("lambert_w_minus1: argument outside [-1/e, 0)");
    }
    if (x == -inv_e) {
        return -1.0;
    }

    double w;
    const double q = 1.0 + std::numbers::e * x;  // distance from the branch point, in [0, 1)
    if (q < 0.25) {
        const double p = -std::sqrt(2.0 * q);
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    } else {
        const double l1 = std::log(-x);
        const double l2 = std::log(-l1);
        w = l1 - l2 + l2 / l1;
    }

    for (int iter = 0; iter < 100; ++iter) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) {
            break;
        }
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        const double step = f / denom;
        w -= step;
        if (w > -1.0) {
            w = -1.0;  // stay on the lower branch
        }
        if (std::abs(step) <= rel_tol * std::abs(w)) {
            break;
        }
    }
    return w;
}

}  // namespace pacmcts
