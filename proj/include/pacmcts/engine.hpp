#pragma once

// Frontier search with bias-aware confidence pruning, plus the UCB1 baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bandit.hpp"
#include "confidence.hpp"

namespace pacmcts {

namespace policy {
// b_m + u_dist(n_m) < b_best - u_dist(n_best) - epsilon.
struct StrictPAC {};
// Same rule with the bias shield removed (radius = u_stat).
struct Naive {};
// Drop the floor(fraction * |A_t|) lowest empirical means each epoch.
struct Proportion {
    double fraction = 0.3;
};
struct NoPruning {};
}  // namespace policy

using PruningPolicy = std::variant<policy::StrictPAC, policy::Naive, policy::Proportion, policy::NoPruning>;

inline std::string policy_name(const PruningPolicy& p) {
    struct {
        std::string operator()(const policy::StrictPAC&) const { return "pac"; }
        std::string operator()(const policy::Naive&) const { return "naive"; }
        std::string operator()(const policy::Proportion& q) const {
            char buf[48];
            std::snprintf(buf, sizeof buf, "proportion:%g", q.fraction);
            return buf;
        }
        std::string operator()(const policy::NoPruning&) const { return "none"; }
    } visitor;
    return std::visit(visitor, p);
}

enum class Allocation {
    automatic,    // round_robin on flat instances, ucb_greedy on trees
    round_robin,  // one pull per active arm per epoch
    ucb_greedy,   // one pull per epoch on the arm maximising b + u_dist
};

struct DynamicBias {
    bool enabled = false;
    double c_bias = 1.0;
};

enum class PruningRateMode {
    arms,          // arms pruned / (arms that entered the frontier - 1)
    budget_saved,  // 1 - samples used / budget
};

struct EngineConfig {
    ConfidenceConfig confidence;
    PruningPolicy policy = policy::StrictPAC{};
    std::uint64_t budget = 1000;
    Allocation allocation = Allocation::automatic;
    DynamicBias dynamic_bias;
    std::uint64_t min_pulls = 1;  // pulls every active arm needs before any pruning decision

    void validate() const {
        confidence.validate();
        if (budget < 1) throw std::invalid_argument("budget: must be >= 1");
        if (min_pulls < 1) throw std::invalid_argument("min_pulls: must be >= 1");
        if (dynamic_bias.enabled && !(dynamic_bias.c_bias > 0.0)) {
            throw std::invalid_argument("dynamic_bias.c_bias: must be > 0");
        }
        if (const auto* p = std::get_if<policy::Proportion>(&policy)) {
            if (!(p->fraction >= 0.0 && p->fraction < 1.0)) {
                throw std::invalid_argument("policy.fraction: must lie in [0, 1)");
            }
        }
    }
};

enum class PruneReason { strict_pac, naive, proportion };

inline const char* to_string(PruneReason r) {
    switch (r) {
        case PruneReason::strict_pac: return "strict_pac";
        case PruneReason::naive: return "naive";
        case PruneReason::proportion: return "proportion";
    }
    return "?";
}

struct PruningEvent {
    std::uint64_t epoch = 0;
    ArmId arm = 0;
    PruneReason reason = PruneReason::strict_pac;
    // Proportion policy only: did the ground-truth gap-and-cardinality
    // condition hold at this elimination epoch? Audit data, never read by the policy.
    std::optional<bool> audit_condition;
};

struct RunRecord {
    std::string policy;
    ArmId selected_arm = 0;
    double selected_true_mu = 0.0;
    double optimal_value = 0.0;
    bool correct = false;
    std::uint64_t budget = 0;
    std::uint64_t total_samples = 0;
    std::uint64_t epochs = 0;
    bool collapsed = false;  // terminated because a single arm remained
    bool optimal_pruned = false;
    std::size_t arms_seen = 0;
    std::size_t max_depth = 0;
    std::vector<PruningEvent> pruning_events;
    std::vector<std::uint64_t> final_pulls;  // indexed by arm id

    double pruning_rate(PruningRateMode mode = PruningRateMode::arms) const {
        if (mode == PruningRateMode::budget_saved) {
            return budget == 0 ? 0.0 : 1.0 - static_cast<double>(total_samples) / static_cast<double>(budget);
        }
        if (arms_seen <= 1) return 0.0;
        return static_cast<double>(pruning_events.size()) / static_cast<double>(arms_seen - 1);
    }
    double suboptimality() const { return optimal_value - selected_true_mu; }
};

// What the engine saw at one pruning decision, after radii were computed.
struct EpochView {
    std::uint64_t epoch = 0;
    std::span<const ArmId> active;
    std::span<const ArmStats> stats;  // indexed by arm id
    std::span<const double> radius;   // aligned with `active`
    double bias_used = 0.0;
};

using EpochObserver = std::function<void(const EpochView&)>;

/// c_bias times the standard deviation of the active arms' empirical means.
/// std::nullopt when fewer than two active arms have been pulled.
inline std::optional<double> estimate_dynamic_bias(std::span<const ArmId> active, std::span<const ArmStats> stats,
                                                   double c_bias) {
    // Two-pass on values shifted by the first mean, so equal means give exactly 0.
    if (active.size() < 2) return std::nullopt;
    for (ArmId a : active) {
        if (stats[a].pulls == 0) return std::nullopt;
    }
    const double ref = stats[active.front()].mean();
    const double count = static_cast<double>(active.size());
    double sum = 0.0;
    for (ArmId a : active) sum += stats[a].mean() - ref;
    const double shift = sum / count;
    double ss = 0.0;
    for (ArmId a : active) {
        const double d = stats[a].mean() - ref - shift;
        ss += d * d;
    }
    const double var = ss / count;
    return c_bias * std::sqrt(var);
}

namespace detail {

// Lowest-index arg-max of the empirical mean among pulled arms.
inline std::optional<std::size_t> best_position(std::span<const ArmId> active, std::span<const ArmStats> stats) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < active.size(); ++i) {
        const ArmStats& s = stats[active[i]];
        if (s.pulls == 0) continue;
        if (!best || s.mean() > stats[active[*best]].mean() ||
            (s.mean() == stats[active[*best]].mean() && active[i] < active[*best])) {
            best = i;
        }
    }
    return best;
}

inline void finish(RunRecord& rec, const Environment& env, std::span<const ArmId> active,
                   std::span<const ArmStats> stats) {
    const auto pos = best_position(active, stats);
    rec.selected_arm = pos ? active[*pos] : active.front();
    rec.selected_true_mu = env.mu(rec.selected_arm);
    rec.optimal_value = env.optimal_value();
    rec.correct = env.is_optimal(rec.selected_arm);
    rec.final_pulls.assign(stats.size(), 0);
    for (std::size_t i = 0; i < stats.size(); ++i) rec.final_pulls[i] = stats[i].pulls;
}

inline void replace_with_children(Environment& env, std::vector<ArmId>& active, std::size_t pos,
                                  std::vector<ArmStats>& stats, RunRecord& rec) {
    const ArmId parent = active[pos];
    const auto kids = env.expand(parent);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(pos));
    active.insert(active.end(), kids.begin(), kids.end());
    if (stats.size() < env.node_count()) {
        const std::size_t old = stats.size();
        stats.resize(env.node_count());
        for (std::size_t i = old; i < stats.size(); ++i) stats[i].arm_id = i;
    }
    rec.arms_seen += kids.size();
    for (ArmId k : kids) rec.max_depth = std::max(rec.max_depth, env.depth(k));
}

}  // namespace detail

/// Runs one replication of frontier search under `config.policy`.
///
/// Each epoch: allocate pulls to the active set, recompute every radius with
/// the current |A_t| in the union bound, prune by the policy's rule, and (tree
/// instances only) replace the arm maximising b + u_dist by its children.
/// Stops when the budget is spent or one unexpandable arm is left, and
/// returns the active arm with the highest empirical mean.
inline RunRecord run_engine(Environment& env, const EngineConfig& config, const EpochObserver& observer = {}) {
    config.validate();
    const ConfidenceConfig& conf = config.confidence;
    const bool tree = env.is_tree();
    const Allocation allocation = config.allocation == Allocation::automatic
                                      ? (tree ? Allocation::ucb_greedy : Allocation::round_robin)
                                      : config.allocation;
    const bool naive = std::holds_alternative<policy::Naive>(config.policy);
    const auto* proportion = std::get_if<policy::Proportion>(&config.policy);
    const bool strict = std::holds_alternative<policy::StrictPAC>(config.policy);

    RunRecord rec;
    rec.policy = policy_name(config.policy);
    if (config.dynamic_bias.enabled) rec.policy += "+dynamic";
    rec.budget = config.budget;

    std::vector<ArmId> active = env.initial_frontier();
    std::vector<ArmStats> stats(env.node_count());
    for (std::size_t i = 0; i < stats.size(); ++i) stats[i].arm_id = i;
    rec.arms_seen = active.size();
    for (ArmId a : active) rec.max_depth = std::max(rec.max_depth, env.depth(a));

    std::vector<double> radius;
    std::vector<std::uint8_t> doomed;
    std::uint64_t samples = 0;
    std::uint64_t epoch = 0;

    auto bias_for_epoch = [&]() -> double {
        if (naive) return 0.0;
        double bias = conf.bias_bound;
        if (config.dynamic_bias.enabled) {
            if (const auto est = estimate_dynamic_bias(active, stats, config.dynamic_bias.c_bias)) {
                bias = std::min(bias, *est);
            }
        }
        return bias;
    };
    auto compute_radii = [&](double bias) {
        const std::uint64_t m = active.size();
        radius.assign(active.size(), 0.0);
        for (std::size_t i = 0; i < active.size(); ++i) {
            radius[i] = u_stat(stats[active[i]].pulls, m, conf) + bias;
        }
    };

    while (samples < config.budget && !active.empty()) {
        if (active.size() == 1) {
            if (tree && env.can_expand(active[0])) {
                detail::replace_with_children(env, active, 0, stats, rec);
                continue;
            }
            rec.collapsed = true;
            break;
        }
        ++epoch;

        // Phase 1: allocation.
        if (allocation == Allocation::round_robin) {
            for (ArmId a : active) {
                if (samples >= config.budget) break;
                stats[a].record(env.sample(a, epoch).value);
                ++samples;
            }
        } else {
            std::optional<ArmId> pick;
            for (ArmId a : active) {
                if (stats[a].pulls < config.min_pulls) {
                    pick = a;
                    break;
                }
            }
            if (!pick) {
                compute_radii(bias_for_epoch());
                std::size_t best = 0;
                for (std::size_t i = 1; i < active.size(); ++i) {
                    if (stats[active[i]].mean() + radius[i] > stats[active[best]].mean() + radius[best]) best = i;
                }
                pick = active[best];
            }
            stats[*pick].record(env.sample(*pick, epoch).value);
            ++samples;
        }

        const bool ready = std::all_of(active.begin(), active.end(),
                                       [&](ArmId a) { return stats[a].pulls >= config.min_pulls; });
        if (!ready) continue;

        // Phase 2: radii with the current frontier size.
        const double bias = bias_for_epoch();
        compute_radii(bias);
        if (observer) observer(EpochView{epoch, active, stats, radius, bias});

        // Phase 3: pruning.
        doomed.assign(active.size(), 0);
        const std::size_t best = *detail::best_position(active, stats);
        if (strict || naive) {
            const double threshold = stats[active[best]].mean() - radius[best] - conf.epsilon;
            for (std::size_t i = 0; i < active.size(); ++i) {
                if (i == best) continue;
                if (stats[active[i]].mean() + radius[i] < threshold) doomed[i] = 1;
            }
        } else if (proportion) {
            const auto k_raw = static_cast<std::size_t>(std::floor(proportion->fraction * static_cast<double>(active.size())));
            const std::size_t k = std::min(k_raw, active.size() - 1);
            if (k > 0) {
                std::vector<std::size_t> order(active.size());
                for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
                // Lowest mean first; among equal means the higher id goes first.
                std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
                    const double bx = stats[active[x]].mean();
                    const double by = stats[active[y]].mean();
                    return bx != by ? bx < by : active[x] > active[y];
                });
                for (std::size_t j = 0; j < k; ++j) doomed[order[j]] = 1;

                // Ground-truth audit of the elimination-safety condition.
                std::optional<bool> audit;
                const auto star = std::find_if(active.begin(), active.end(), [&](ArmId a) { return env.is_optimal(a); });
                if (star != active.end()) {
                    const std::uint64_t m = active.size();
                    const double u_star = u_stat(stats[*star].pulls, m, conf);
                    std::size_t bad = 0;
                    for (ArmId a : active) {
                        if (a == *star) continue;
                        const double gap = env.mu(*star) - env.mu(a);
                        if (gap > 2.0 * conf.bias_bound + u_star + u_stat(stats[a].pulls, m, conf)) ++bad;
                    }
                    audit = k <= bad;
                }
                for (std::size_t i = 0; i < active.size(); ++i) {
                    if (doomed[i]) rec.pruning_events.push_back({epoch, active[i], PruneReason::proportion, audit});
                }
            }
        }
        if (strict || naive) {
            const PruneReason reason = naive ? PruneReason::naive : PruneReason::strict_pac;
            for (std::size_t i = 0; i < active.size(); ++i) {
                if (doomed[i]) rec.pruning_events.push_back({epoch, active[i], reason, std::nullopt});
            }
        }
        std::vector<double> kept_radius;
        std::vector<ArmId> kept;
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (doomed[i]) {
                if (env.is_optimal(active[i])) rec.optimal_pruned = true;
                continue;
            }
            kept.push_back(active[i]);
            kept_radius.push_back(radius[i]);
        }
        active.swap(kept);

        // Phase 4: optimistic expansion (tree instances).
        if (tree && active.size() > 1) {
            std::size_t pick = 0;
            for (std::size_t i = 1; i < active.size(); ++i) {
                if (stats[active[i]].mean() + kept_radius[i] > stats[active[pick]].mean() + kept_radius[pick]) pick = i;
            }
            if (env.can_expand(active[pick])) detail::replace_with_children(env, active, pick, stats, rec);
        }
    }

    rec.total_samples = samples;
    rec.epochs = epoch;
    detail::finish(rec, env, active, stats);
    return rec;
}

inline RunRecord run_pac_mcts(Environment& env, EngineConfig config, const EpochObserver& observer = {}) {
    config.policy = policy::StrictPAC{};
    return run_engine(env, config, observer);
}

inline RunRecord run_naive_pruning(Environment& env, EngineConfig config, const EpochObserver& observer = {}) {
    config.policy = policy::Naive{};
    return run_engine(env, config, observer);
}

inline RunRecord run_proportion_pruning(Environment& env, EngineConfig config, double fraction,
                                        const EpochObserver& observer = {}) {
    config.policy = policy::Proportion{fraction};
    return run_engine(env, config, observer);
}

/// UCB1 allocation b_m + c * sqrt(2 ln t / n_m) with no pruning; every arm is
/// pulled once first. On trees a selected node that has already been pulled
/// is expanded instead of sampled. Returns the empirical arg-max.
inline RunRecord run_baseline_uct(Environment& env, std::uint64_t budget, double exploration) {
    if (budget < env.initial_frontier().size()) {
        throw std::invalid_argument("budget: UCT needs at least one pull per initial arm");
    }
    if (!(exploration >= 0.0)) throw std::invalid_argument("uct_exploration: must be >= 0");

    RunRecord rec;
    rec.policy = "uct";
    rec.budget = budget;
    std::vector<ArmId> active = env.initial_frontier();
    std::vector<ArmStats> stats(env.node_count());
    for (std::size_t i = 0; i < stats.size(); ++i) stats[i].arm_id = i;
    rec.arms_seen = active.size();
    for (ArmId a : active) rec.max_depth = std::max(rec.max_depth, env.depth(a));

    std::uint64_t samples = 0;
    std::uint64_t steps = 0;
    while (samples < budget) {
        ++steps;
        std::optional<std::size_t> pick;
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (stats[active[i]].pulls == 0) {
                pick = i;
                break;
            }
        }
        if (!pick) {
            const double log_t = std::log(static_cast<double>(samples));
            double best_score = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < active.size(); ++i) {
                const ArmStats& s = stats[active[i]];
                const double score = s.mean() + exploration * std::sqrt(2.0 * log_t / static_cast<double>(s.pulls));
                if (score > best_score) {
                    best_score = score;
                    pick = i;
                }
            }
        }
        const ArmId arm = active[*pick];
        if (env.can_expand(arm) && stats[arm].pulls > 0) {
            detail::replace_with_children(env, active, *pick, stats, rec);
            continue;
        }
        stats[arm].record(env.sample(arm, steps).value);
        ++samples;
    }
    rec.total_samples = samples;
    rec.epochs = steps;
    detail::finish(rec, env, active, stats);
    return rec;
}

}  // namespace pacmcts
