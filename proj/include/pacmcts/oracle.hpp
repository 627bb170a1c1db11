#pragma once

// Independent checks of the radii and the pruning engine against ground
// truth. The oracle may read true means; the engine never does.

#include <cmath>
#include <cstdint>
#include <limits>
#include <functional>
#include <string>
#include <vector>

#include "bandit.hpp"
#include "confidence.hpp"
#include "engine.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace pacmcts {

struct CoverageReport {
    std::size_t trials = 0;
    std::uint64_t horizon = 0;
    std::size_t violations = 0;  // trajectories with any |b_m(n) - mu_m| > u_dist(n)
    double rate = 0.0;
    double allowance = 0.0;  // delta + 3 sqrt(delta (1 - delta) / trials)
    bool passed = false;
};

/// Simulates `trials` independent trajectories of `m_count` arms for
/// `horizon` pulls each under the frozen worst-case offsets (+L on every arm)
/// and counts trajectories where the time-uniform bound ever fails.
inline CoverageReport verify_concentration(const ConfidenceConfig& config, std::size_t m_count,
                                           std::uint64_t horizon, std::size_t trials, std::uint64_t seed,
                                           std::size_t workers = 0) {
    config.validate();
    if (trials < 1000) throw std::invalid_argument("trials: must be >= 1000");
    if (m_count < 1 || horizon < 1) throw std::invalid_argument("m_count and horizon must be >= 1");

    std::vector<double> radius(horizon + 1, 0.0);
    for (std::uint64_t n = 1; n <= horizon; ++n) radius[n] = u_dist(n, m_count, config);

    std::vector<std::uint8_t> violated(trials, 0);
    const double offset = config.bias_bound;
    parallel_for(trials, workers, [&](std::size_t trial) {
        RandomStream stream(derive_seed(seed, "coverage", trial));
        for (std::size_t m = 0; m < m_count; ++m) {
            // mu_m = 0 without loss of generality; b - mu is the running mean of offset + noise.
            double sum = 0.0;
            for (std::uint64_t n = 1; n <= horizon; ++n) {
                sum += offset + config.sigma * stream.next_gaussian();
                if (std::abs(sum / static_cast<double>(n)) > radius[n]) {
                    violated[trial] = 1;
                    return;
                }
            }
        }
    });

    CoverageReport report;
    report.trials = trials;
    report.horizon = horizon;
    for (auto v : violated) report.violations += v;
    report.rate = static_cast<double>(report.violations) / static_cast<double>(trials);
    report.allowance = config.delta + 3.0 * std::sqrt(config.delta * (1.0 - config.delta) / static_cast<double>(trials));
    report.passed = report.rate <= report.allowance;
    return report;
}

struct SafetyReplayConfig {
    std::vector<double> mu{1.0, 0.0, 0.0, 0.0};
    double bias = 0.1;
    double sigma = 0.2;
    std::uint64_t budget = 60;
    double delta = 0.05;
    double c_stat = 1.0;
    double proportion = 0.3;
    std::size_t seeds = 10000;
    std::uint64_t base_seed = 1;
};

struct SafetyReport {
    std::size_t replays = 0;
    // StrictPAC
    std::size_t strict_event_held = 0;        // replays whose event held at every epoch
    std::size_t strict_pruning_events = 0;    // total eliminations across all replays
    std::size_t strict_optimal_pruned = 0;    // m* eliminated at all
    std::size_t strict_violations = 0;        // m* eliminated while the event had held so far
    // Proportion
    std::size_t proportion_elimination_epochs = 0;
    std::size_t proportion_audit_failures = 0;   // epochs where K <= |M_bad| did not hold
    std::size_t proportion_optimal_pruned = 0;
    std::size_t proportion_violations = 0;       // m* eliminated with audit held and event held so far
    bool passed = false;
};

namespace detail {

// Tracks the first epoch at which some active arm left its confidence band.
struct EventTracker {
    const Environment* env = nullptr;
    std::uint64_t first_failure = std::numeric_limits<std::uint64_t>::max();

    void operator()(const EpochView& view) {
        for (std::size_t i = 0; i < view.active.size(); ++i) {
            const ArmId a = view.active[i];
            if (std::abs(view.stats[a].mean() - env->mu(a)) > view.radius[i]) {
                first_failure = std::min(first_failure, view.epoch);
                return;
            }
        }
    }
    bool held_through(std::uint64_t epoch) const { return epoch < first_failure; }
};

}  // namespace detail

/// Replays StrictPAC and Proportion over `seeds` seeds of a small frozen
/// static-adversarial instance and checks the optimal arm's survival whenever
/// the guarantees' preconditions held.
inline SafetyReport verify_safe_pruning_exhaustive(const SafetyReplayConfig& cfg, std::size_t workers = 0) {
    if (cfg.mu.size() < 2 || cfg.mu.size() > 4) throw std::invalid_argument("mu: need 2..4 arms");
    if (cfg.budget > 60) throw std::invalid_argument("budget: must be <= 60");

    struct Slot {
        bool strict_held = false;
        std::size_t strict_events = 0;
        bool strict_optimal = false, strict_violation = false;
        std::size_t prop_epochs = 0, prop_audit_failures = 0;
        bool prop_optimal = false, prop_violation = false;
    };
    std::vector<Slot> slots(cfg.seeds);

    EngineConfig ec;
    ec.confidence = {cfg.sigma, cfg.delta, 0.0, cfg.bias, cfg.c_stat};
    ec.budget = cfg.budget;
    ec.allocation = Allocation::round_robin;

    parallel_for(cfg.seeds, workers, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(cfg.base_seed, "safety-replay", i);
        Slot& slot = slots[i];
        {
            Environment env = Environment::flat(cfg.mu, bias::StaticAdversarial{cfg.bias}, cfg.sigma, seed);
            detail::EventTracker tracker{&env};
            const RunRecord rec = run_pac_mcts(env, ec, std::ref(tracker));
            slot.strict_held = tracker.first_failure == std::numeric_limits<std::uint64_t>::max();
            slot.strict_events = rec.pruning_events.size();
            for (const auto& ev : rec.pruning_events) {
                if (!env.is_optimal(ev.arm)) continue;
                slot.strict_optimal = true;
                if (tracker.held_through(ev.epoch)) slot.strict_violation = true;
            }
        }
        {
            Environment env = Environment::flat(cfg.mu, bias::StaticAdversarial{cfg.bias}, cfg.sigma, seed);
            detail::EventTracker tracker{&env};
            const RunRecord rec = run_proportion_pruning(env, ec, cfg.proportion, std::ref(tracker));
            std::uint64_t last_epoch = 0;
            for (const auto& ev : rec.pruning_events) {
                if (ev.epoch != last_epoch) {
                    ++slot.prop_epochs;
                    if (ev.audit_condition && !*ev.audit_condition) ++slot.prop_audit_failures;
                    last_epoch = ev.epoch;
                }
                if (!env.is_optimal(ev.arm)) continue;
                slot.prop_optimal = true;
                if (ev.audit_condition.value_or(false) && tracker.held_through(ev.epoch)) slot.prop_violation = true;
            }
        }
    });

    SafetyReport report;
    report.replays = cfg.seeds;
    for (const auto& s : slots) {
        report.strict_event_held += s.strict_held;
        report.strict_pruning_events += s.strict_events;
        report.strict_optimal_pruned += s.strict_optimal;
        report.strict_violations += s.strict_violation;
        report.proportion_elimination_epochs += s.prop_epochs;
        report.proportion_audit_failures += s.prop_audit_failures;
        report.proportion_optimal_pruned += s.prop_optimal;
        report.proportion_violations += s.prop_violation;
    }
    report.passed = report.strict_violations == 0 && report.proportion_violations == 0;
    return report;
}

struct MinimalityReport {
    std::size_t trials = 0;
    std::size_t minimal = 0;       // 4 u(n*) < margin and 4 u(n* - 1) >= margin
    std::size_t solvers_agree = 0;  // |lambert - root finding| <= 1
    std::uint64_t max_disagreement = 0;
    bool passed = false;
};

/// Draws random feasible inputs in the monotone regime (C1 >= e^2) and checks
/// that root-finding returns the minimal separating n and that the Lambert
/// inversion lands within one sample of it.
inline MinimalityReport verify_complexity_minimality(std::size_t trials, std::uint64_t seed) {
    MinimalityReport report;
    RandomStream stream(derive_seed(seed, "minimality", 0));
    while (report.trials < trials) {
        ComplexityInputs in;
        in.gap = stream.next_uniform(0.05, 3.0);
        in.config.bias_bound = stream.next_uniform(0.0, 0.24) * in.gap;
        const double eff = in.gap - 4.0 * in.config.bias_bound;
        in.config.epsilon = stream.next_uniform(0.0, 0.8) * eff;
        in.config.sigma = stream.next_uniform(0.05, 3.0);
        in.config.delta = stream.next_uniform(0.001, 0.3);
        in.config.radius_factor = 1.0;
        in.frontier_size = 2 + stream.next_u64() % 499;
        if (!in.feasible() || monotone_tail_start(in.frontier_size, in.config.delta) != 1) continue;

        ++report.trials;
        const auto n = sample_complexity_upper(in);
        std::uint64_t w = 1;  // no lower-branch root: separation already holds at n = 1
        try {
            w = *sample_complexity_lambert(in);
        } catch (const std::domain_error&) {
        }
        const double margin = in.separation_margin();
        const bool ok_here = 4.0 * u_stat(*n, in.frontier_size, in.config) < margin;
        const bool fails_before = *n == 1 || !(4.0 * u_stat(*n - 1, in.frontier_size, in.config) < margin);
        if (ok_here && fails_before) ++report.minimal;
        const std::uint64_t diff = *n > w ? *n - w : w - *n;
        report.max_disagreement = std::max(report.max_disagreement, diff);
        if (diff <= 1) ++report.solvers_agree;
    }
    report.passed = report.minimal == report.trials && report.solvers_agree == report.trials;
    return report;
}

}  // namespace pacmcts
