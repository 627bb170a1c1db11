#pragma once

// Closed-form confidence radii and sample-complexity calculators for
// bias-aware elimination under sigma^2-sub-Gaussian noise with a bounded
// systematic bias L.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "lambert_w.hpp"

namespace pacmcts {

struct ConfidenceConfig {
    double sigma = 1.0;          // noise scale (reward units)
    double delta = 0.05;         // failure probability
    double epsilon = 0.0;        // suboptimality tolerance (reward units)
    double bias_bound = 0.0;     // L (reward units)
    double radius_factor = 1.0;  // c_stat, scales the statistical radius only

    // Throws std::invalid_argument naming the offending field.
    void validate() const {
        auto fail = [](const std::string& field, const std::string& rule) {
            throw std::invalid_argument(field + ": " + rule);
        };
        // sigma == 0 is admitted for noiseless environments.
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma", "must be finite and >= 0");
        if (!(delta > 0.0 && delta < 1.0)) fail("delta", "must lie in (0, 1)");
        if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail("epsilon", "must be finite and >= 0");
        if (!(bias_bound >= 0.0) || !std::isfinite(bias_bound)) fail("bias_bound", "must be finite and >= 0");
        if (!(radius_factor > 0.0) || !std::isfinite(radius_factor)) fail("radius_factor", "must be finite and > 0");
    }
};

struct ComplexityInputs {
    double gap = 0.0;                // Delta_m > 0
    std::uint64_t frontier_size = 2;  // M >= 2
    ConfidenceConfig config;

    void validate() const {
        config.validate();
        if (!(gap > 0.0) || !std::isfinite(gap)) throw std::invalid_argument("gap: must be finite and > 0");
        if (frontier_size < 2) throw std::invalid_argument("frontier_size: must be >= 2");
    }

    // Delta - 4L; may be <= 0.
    double effective_gap() const { return gap - 4.0 * config.bias_bound; }

    // Delta - 4L - epsilon, the margin the statistical radii have to fit into.
    double separation_margin() const { return effective_gap() - config.epsilon; }

    bool feasible() const { return separation_margin() > 0.0; }
};

/// Time-uniform statistical radius with a union bound over `m_count` arms:
/// c * sqrt(2 sigma^2 ln(pi^2 n^2 M / (3 delta)) / n).
inline double u_stat(std::uint64_t n, std::uint64_t m_count, const ConfidenceConfig& config) {
    if (n == 0) throw std::invalid_argument("u_stat: n must be >= 1");
    if (m_count == 0) throw std::invalid_argument("u_stat: m_count must be >= 1");
    config.validate();
    const double nd = static_cast<double>(n);
    const double log_arg = std::numbers::pi * std::numbers::pi * nd * nd * static_cast<double>(m_count) /
                           (3.0 * config.delta);
    return config.radius_factor * std::sqrt(2.0 * config.sigma * config.sigma * std::log(log_arg) / nd);
}

// u_stat plus the bias shield L (the shield is never scaled by c_stat).
inline double u_dist(std::uint64_t n, std::uint64_t m_count, const ConfidenceConfig& config) {
    return u_stat(n, m_count, config) + config.bias_bound;
}

// C1 = pi^2 M / (3 delta).
inline double union_constant(std::uint64_t m_count, double delta) {
    return std::numbers::pi * std::numbers::pi * static_cast<double>(m_count) / (3.0 * delta);
}

/// First sample count from which u_stat is non-increasing: n >= e / sqrt(C1).
/// Equals 1 whenever C1 >= e^2.
inline std::uint64_t monotone_tail_start(std::uint64_t m_count, double delta) {
    const double c1 = union_constant(m_count, delta);
    const double turn = std::numbers::e / std::sqrt(c1);
    return turn <= 1.0 ? 1 : static_cast<std::uint64_t>(std::ceil(turn));
}

/// Smallest n on the monotone tail with 4 * u_stat(n) < Delta - 4L - epsilon.
/// Returns std::nullopt when the margin is non-positive (separation can never
/// be certified, whatever the budget).
inline std::optional<std::uint64_t> sample_complexity_upper(const ComplexityInputs& inputs) {
    inputs.validate();
    if (!inputs.feasible()) return std::nullopt;
    const auto& cfg = inputs.config;
    if (union_constant(inputs.frontier_size, cfg.delta) <= 1.0) {
        throw std::domain_error("sample_complexity_upper: C1 <= 1");
    }
    if (cfg.sigma == 0.0) return std::uint64_t{1};

    const double margin = inputs.separation_margin();
    auto separates = [&](std::uint64_t n) { return 4.0 * u_stat(n, inputs.frontier_size, cfg) < margin; };

    const std::uint64_t start = monotone_tail_start(inputs.frontier_size, cfg.delta);
    if (separates(start)) return start;

    std::uint64_t lo = start;  // invariant: !separates(lo)
    std::uint64_t hi = start * 2;
    while (!separates(hi)) {
        if (hi > (std::uint64_t{1} << 62)) throw std::overflow_error("sample_complexity_upper: no solution below 2^62");
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (separates(mid) ? hi : lo) = mid;
    }
    return hi;
}

/// Closed-form inversion of n / ln(C1 n^2) = C2 on the lower Lambert branch:
/// n = ceil(-2 C2 W_{-1}(-1 / (2 C2 sqrt(C1)))), C2 = 32 c^2 sigma^2 / margin^2.
/// Throws std::domain_error when the branch argument leaves [-1/e, 0).
inline std::optional<std::uint64_t> sample_complexity_lambert(const ComplexityInputs& inputs) {
    inputs.validate();
    if (!inputs.feasible()) return std::nullopt;
    const auto& cfg = inputs.config;
    const double c1 = union_constant(inputs.frontier_size, cfg.delta);
    if (c1 <= 1.0) throw std::domain_error("sample_complexity_lambert: C1 <= 1");
    const double margin = inputs.separation_margin();
    const double scale = cfg.radius_factor * cfg.sigma;
    const double c2 = 32.0 * scale * scale / (margin * margin);
    if (!(c2 > 0.0)) throw std::domain_error("sample_complexity_lambert: C2 must be > 0");
    const double arg = -1.0 / (2.0 * c2 * std::sqrt(c1));
    const double w = lambert_w_minus1(arg);
    return static_cast<std::uint64_t>(std::ceil(-2.0 * c2 * w));
}

/// Change-of-measure floor 2 sigma^2 ln(1/(4 delta)) / (Delta + epsilon - 2L)^2.
/// std::nullopt when Delta + epsilon - 2L <= 0 (the observed gap is reversed);
/// 0 when delta >= 1/4.
inline std::optional<double> lower_bound_samples(double gap, const ConfidenceConfig& config) {
    config.validate();
    const double reduced = gap + config.epsilon - 2.0 * config.bias_bound;
    if (!(reduced > 0.0)) return std::nullopt;
    if (config.delta >= 0.25) return 0.0;
    return 2.0 * config.sigma * config.sigma * std::log(1.0 / (4.0 * config.delta)) / (reduced * reduced);
}

// Worst-case suboptimality of the returned arm: 4L + epsilon.
inline double graceful_degradation_cap(const ConfidenceConfig& config) {
    config.validate();
    return 4.0 * config.bias_bound + config.epsilon;
}

}  // namespace pacmcts
