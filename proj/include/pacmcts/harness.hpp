#pragma once

// Replicated experiments over parameter grids.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandit.hpp"
#include "confidence.hpp"
#include "engine.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace pacmcts {

struct InstanceSpec {
    enum class Kind { flat, tree };
    Kind kind = Kind::flat;
    std::size_t arms = 10;     // flat single-gap instance size
    double gap = 0.1;          // Delta
    double baseline = 0.0;     // value of the suboptimal arms
    std::vector<double> mu;    // overrides arms/gap/baseline when non-empty
    TreeSpec tree;

    std::vector<double> means() const { return mu.empty() ? single_gap_means(arms, gap, baseline) : mu; }

    // Smallest gap between mu* and any other arm (flat), or tree.gap.
    double effective_gap() const {
        if (kind == Kind::tree) return tree.gap;
        if (mu.empty()) return gap;
        const auto m = means();
        const double best = *std::max_element(m.begin(), m.end());
        double g = std::numeric_limits<double>::infinity();
        for (double v : m) {
            if (v < best) g = std::min(g, best - v);
        }
        return g;
    }
    std::size_t frontier_size() const { return kind == Kind::tree ? tree.branching : means().size(); }
};

struct BiasSpec {
    enum class Model { unbiased, static_adversarial, top_k, per_arm };
    Model model = Model::static_adversarial;
    std::size_t top_k = 5;
    std::vector<double> offsets;  // per_arm only, absolute reward units
    BiasNoise noise = BiasNoise::frozen;

    BiasModel make(double bound) const {
        switch (model) {
            case Model::unbiased: return bias::Unbiased{};
            case Model::static_adversarial: return bias::StaticAdversarial{bound};
            case Model::top_k: return bias::TopKAdversarial{bound, top_k};
            case Model::per_arm: return bias::PerArmVector{bound, offsets};
        }
        return bias::Unbiased{};
    }
};

// One parameter combination of a sweep.
struct Cell {
    double bias = 0.0;  // L, absolute
    double sigma = 0.3;
    std::uint64_t budget = 1000;
    double c_stat = 1.0;

    std::string key() const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "L=%.17g|sigma=%.17g|N=%llu|c=%.17g", bias, sigma,
                      static_cast<unsigned long long>(budget), c_stat);
        return buf;
    }
};

struct EfficiencySpec {
    bool enabled = false;
    double target = 0.90;
    double ceiling_factor = 64.0;  // search stops at ceiling_factor * cell budget
    std::string baseline = "uct";
    std::string candidate = "pac";
};

struct ExperimentConfig {
    InstanceSpec instance;
    BiasSpec bias;
    std::vector<double> bias_grid{0.0};  // L values
    bool bias_relative = false;          // bias_grid entries are multiples of the instance gap
    std::vector<double> sigma_grid{0.3};
    std::vector<std::uint64_t> budget_grid{1000};
    std::vector<double> c_stat_grid{1.0};
    std::vector<std::string> policies{"pac", "uct"};
    std::size_t replications = 500;
    std::uint64_t base_seed = 1;
    double delta = 0.05;
    double epsilon = 0.0;
    std::optional<double> uct_exploration;  // defaults to sigma
    double c_bias = 1.0;
    Allocation allocation = Allocation::automatic;
    std::uint64_t min_pulls = 1;
    PruningRateMode rate_mode = PruningRateMode::arms;
    std::size_t max_cells = 100000;
    EfficiencySpec efficiency;

    std::vector<Cell> cells() const {
        std::vector<Cell> out;
        for (double l : bias_grid)
            for (double s : sigma_grid)
                for (std::uint64_t n : budget_grid)
                    for (double c : c_stat_grid) {
                        out.push_back({bias_relative ? l * instance.effective_gap() : l, s, n, c});
                    }
        return out;
    }

    void validate() const;
};

// Parsed policy name: pac, naive, uct, none, proportion:<a>, optionally +dynamic.
struct PolicyChoice {
    bool uct = false;
    PruningPolicy policy = policy::StrictPAC{};
    bool dynamic = false;
};

inline PolicyChoice parse_policy(const std::string& name) {
    PolicyChoice out;
    std::string base = name;
    const std::string suffix = "+dynamic";
    if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
        out.dynamic = true;
        base.resize(base.size() - suffix.size());
    }
    if (base == "pac") {
        out.policy = policy::StrictPAC{};
    } else if (base == "naive") {
        out.policy = policy::Naive{};
    } else if (base == "none") {
        out.policy = policy::NoPruning{};
    } else if (base == "uct" && !out.dynamic) {
        out.uct = true;
    } else if (base.rfind("proportion:", 0) == 0) {
        std::size_t used = 0;
        double a = 0.0;
        try {
            a = std::stod(base.substr(11), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != base.size() - 11 || !(a >= 0.0 && a < 1.0)) {
            throw std::invalid_argument("policies: bad proportion fraction in '" + name + "'");
        }
        out.policy = policy::Proportion{a};
    } else {
        throw std::invalid_argument("policies: unknown policy '" + name + "'");
    }
    return out;
}

inline void ExperimentConfig::validate() const {
    if (replications < 1) throw std::invalid_argument("replications: must be >= 1");
    if (bias_grid.empty()) throw std::invalid_argument("L: must be non-empty");
    if (sigma_grid.empty()) throw std::invalid_argument("sigma: must be non-empty");
    if (budget_grid.empty()) throw std::invalid_argument("budget: must be non-empty");
    if (c_stat_grid.empty()) throw std::invalid_argument("c_stat: must be non-empty");
    if (policies.empty()) throw std::invalid_argument("policies: must be non-empty");
    for (const auto& p : policies) parse_policy(p);
    const std::size_t n_cells = bias_grid.size() * sigma_grid.size() * budget_grid.size() * c_stat_grid.size();
    if (n_cells > max_cells) {
        throw std::invalid_argument("max_cells: grid has " + std::to_string(n_cells) + " cells, ceiling is " +
                                    std::to_string(max_cells));
    }
    for (double l : bias_grid)
        if (!(l >= 0.0)) throw std::invalid_argument("L: entries must be >= 0");
    for (std::uint64_t n : budget_grid)
        if (n < 1) throw std::invalid_argument("budget: entries must be >= 1");
    if (instance.kind == InstanceSpec::Kind::tree) instance.tree.validate();
    for (double c : c_stat_grid)
        if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("c_stat: entries must be finite and > 0");
    for (double s : sigma_grid) ConfidenceConfig{s, delta, epsilon, 0.0, 1.0}.validate();
    if (!(c_bias > 0.0)) throw std::invalid_argument("c_bias: must be > 0");
    if (min_pulls < 1) throw std::invalid_argument("min_pulls: must be >= 1");
    if (efficiency.enabled && !(efficiency.target > 0.0 && efficiency.target <= 1.0)) {
        throw std::invalid_argument("efficiency.target: must lie in (0, 1]");
    }
}

inline Environment make_environment(const ExperimentConfig& cfg, const Cell& cell, std::uint64_t seed) {
    const BiasModel model = cfg.bias.make(cell.bias);
    if (cfg.instance.kind == InstanceSpec::Kind::tree) {
        return Environment::tree(cfg.instance.tree, model, cell.sigma, seed, cfg.bias.noise);
    }
    return Environment::flat(cfg.instance.means(), model, cell.sigma, seed, cfg.bias.noise);
}

inline EngineConfig make_engine_config(const ExperimentConfig& cfg, const Cell& cell, const PolicyChoice& choice) {
    EngineConfig ec;
    ec.confidence = {cell.sigma, cfg.delta, cfg.epsilon, cell.bias, cell.c_stat};
    ec.policy = choice.policy;
    ec.budget = cell.budget;
    ec.allocation = cfg.allocation;
    ec.dynamic_bias = {choice.dynamic, cfg.c_bias};
    ec.min_pulls = cfg.min_pulls;
    return ec;
}

/// One replication of one policy in one cell.
inline RunRecord run_replication(const ExperimentConfig& cfg, const Cell& cell, const std::string& policy,
                                 std::uint64_t seed) {
    const PolicyChoice choice = parse_policy(policy);
    Environment env = make_environment(cfg, cell, seed);
    RunRecord rec;
    if (choice.uct) {
        rec = run_baseline_uct(env, cell.budget, cfg.uct_exploration.value_or(cell.sigma));
    } else {
        rec = run_engine(env, make_engine_config(cfg, cell, choice));
    }
    rec.policy = policy;
    return rec;
}

struct CellOutcome {
    std::size_t successes = 0;
    std::size_t replications = 0;
    double pcs = 0.0;
    double pcs_stderr = 0.0;
    double pruning_rate = 0.0;
    double mean_selected_mu = 0.0;
    double mean_samples = 0.0;
    double cap_violation_rate = 0.0;  // fraction with mu* - mu_selected > 4L + epsilon
};

inline double binomial_stderr(double p, std::size_t n) {
    return n == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

inline CellOutcome aggregate(const std::vector<RunRecord>& records, PruningRateMode mode, double cap) {
    CellOutcome out;
    out.replications = records.size();
    if (records.empty()) return out;
    double prune = 0.0, mu = 0.0, samples = 0.0;
    std::size_t violations = 0;
    for (const auto& r : records) {
        out.successes += r.correct ? 1 : 0;
        prune += r.pruning_rate(mode);
        mu += r.selected_true_mu;
        samples += static_cast<double>(r.total_samples);
        if (r.suboptimality() > cap) ++violations;
    }
    const double n = static_cast<double>(records.size());
    out.pcs = static_cast<double>(out.successes) / n;
    out.pcs_stderr = binomial_stderr(out.pcs, records.size());
    out.pruning_rate = prune / n;
    out.mean_selected_mu = mu / n;
    out.mean_samples = samples / n;
    out.cap_violation_rate = static_cast<double>(violations) / n;
    return out;
}

/// Runs `replications` seeds of one policy in one cell. Seeds are keyed by
/// (base_seed, cell key, replication), so every policy sees the same draws.
inline std::vector<RunRecord> run_cell(const ExperimentConfig& cfg, const Cell& cell, const std::string& policy,
                                       std::size_t workers) {
    std::vector<RunRecord> records(cfg.replications);
    const std::string key = cell.key();
    parallel_for(cfg.replications, workers, [&](std::size_t r) {
        records[r] = run_replication(cfg, cell, policy, derive_seed(cfg.base_seed, key, r));
    });
    return records;
}

struct Efficiency {
    std::optional<double> multiplier;  // empty when censored
    std::optional<std::uint64_t> baseline_budget;
    std::optional<std::uint64_t> candidate_budget;
    bool censored() const { return !multiplier.has_value(); }
};

/// Smallest budget with PCS >= target on a doubling-then-bisection schedule
/// starting at one pull per arm; empty when the ceiling is hit first. The
/// replication seeds do not depend on the budget (common random numbers).
inline std::optional<std::uint64_t> budget_to_target(const ExperimentConfig& cfg, const Cell& cell,
                                                     const std::string& policy, double target,
                                                     std::uint64_t ceiling, std::size_t workers) {
    auto pcs_at = [&](std::uint64_t n) {
        Cell c = cell;
        c.budget = n;
        std::vector<RunRecord> records(cfg.replications);
        const std::string key = cell.key() + "|efficiency";
        parallel_for(cfg.replications, workers, [&](std::size_t r) {
            records[r] = run_replication(cfg, c, policy, derive_seed(cfg.base_seed, key, r));
        });
        std::size_t ok = 0;
        for (const auto& rec : records) ok += rec.correct ? 1 : 0;
        return static_cast<double>(ok) / static_cast<double>(records.size());
    };
    std::uint64_t hi = std::max<std::uint64_t>(cfg.instance.frontier_size(), 1);
    std::uint64_t lo = 0;  // largest budget known to miss the target (0 = none tried)
    while (pcs_at(hi) < target) {
        if (hi >= ceiling) return std::nullopt;
        lo = hi;
        hi = std::min(hi * 2, ceiling);
    }
    if (lo == 0) return hi;
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (pcs_at(mid) >= target ? hi : lo) = mid;
    }
    return hi;
}

/// N_baseline(target) / N_candidate(target).
inline Efficiency efficiency_multiplier(const ExperimentConfig& cfg, const Cell& cell, std::size_t workers = 0) {
    const auto& spec = cfg.efficiency;
    const auto ceiling = static_cast<std::uint64_t>(std::ceil(spec.ceiling_factor * static_cast<double>(cell.budget)));
    Efficiency out;
    out.baseline_budget = budget_to_target(cfg, cell, spec.baseline, spec.target, ceiling, workers);
    out.candidate_budget = budget_to_target(cfg, cell, spec.candidate, spec.target, ceiling, workers);
    if (out.baseline_budget && out.candidate_budget) {
        out.multiplier = static_cast<double>(*out.baseline_budget) / static_cast<double>(*out.candidate_budget);
    }
    return out;
}

struct SweepRow {
    std::string policy;
    Cell cell;
    CellOutcome outcome;
    std::optional<Efficiency> efficiency;  // only on the candidate policy's rows
};

struct TaggedRecord {
    Cell cell;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    RunRecord record;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<TaggedRecord> records;
};

struct ProgressSink {
    virtual ~ProgressSink() = default;
    virtual void cell_done(std::size_t done, std::size_t total, const SweepRow& row) = 0;
};

/// Every (cell, policy) pair in grid order; deterministic for a given config.
inline SweepResult run_sweep(const ExperimentConfig& cfg, std::size_t workers = 0, bool keep_records = true,
                             ProgressSink* progress = nullptr) {
    cfg.validate();
    SweepResult result;
    const auto cells = cfg.cells();
    const std::size_t total = cells.size() * cfg.policies.size();
    std::size_t done = 0;
    for (const Cell& cell : cells) {
        std::optional<Efficiency> eff;
        if (cfg.efficiency.enabled) eff = efficiency_multiplier(cfg, cell, workers);
        for (const std::string& policy : cfg.policies) {
            auto records = run_cell(cfg, cell, policy, workers);
            SweepRow row;
            row.policy = policy;
            row.cell = cell;
            row.outcome = aggregate(records, cfg.rate_mode, 4.0 * cell.bias + cfg.epsilon);
            if (eff && policy == cfg.efficiency.candidate) row.efficiency = eff;
            if (keep_records) {
                const std::string key = cell.key();
                for (std::size_t r = 0; r < records.size(); ++r) {
                    result.records.push_back({cell, r, derive_seed(cfg.base_seed, key, r), std::move(records[r])});
                }
            }
            result.rows.push_back(std::move(row));
            if (progress) progress->cell_done(++done, total, result.rows.back());
        }
    }
    return result;
}

struct ScalingPoint {
    std::uint64_t budget = 0;
    double pcs = 0.0;
    double pcs_stderr = 0.0;
};

/// PCS of `policy` at each budget of the grid (first L, sigma and c_stat values).
inline std::vector<ScalingPoint> scaling_curve(const ExperimentConfig& cfg, const std::string& policy = "pac",
                                               std::size_t workers = 0) {
    cfg.validate();
    std::vector<ScalingPoint> out;
    for (std::uint64_t n : cfg.budget_grid) {
        Cell cell{cfg.bias_relative ? cfg.bias_grid.front() * cfg.instance.effective_gap() : cfg.bias_grid.front(),
                  cfg.sigma_grid.front(), n, cfg.c_stat_grid.front()};
        const auto o = aggregate(run_cell(cfg, cell, policy, workers), cfg.rate_mode, 4.0 * cell.bias + cfg.epsilon);
        out.push_back({n, o.pcs, o.pcs_stderr});
    }
    return out;
}

// mu* = 10, runner-up 6, eight further arms spaced 0.75 apart on [0, 6).
inline std::vector<double> degradation_means() {
    std::vector<double> mu{10.0, 6.0};
    for (int i = 0; i < 8; ++i) mu.push_back(0.75 * i);
    return mu;
}

struct DegradationRow {
    double bias = 0.0;
    double pcs = 0.0;
    double mean_reward = 0.0;
    double cap = 0.0;
    double cap_violation_rate = 0.0;
};

/// StrictPAC on the reconstructed evaluator-quality instance, one row per L.
inline std::vector<DegradationRow> degradation_study(const std::vector<double>& profiles, double sigma = 2.0,
                                                     std::uint64_t budget = 200, std::size_t replications = 500,
                                                     std::uint64_t base_seed = 1, std::size_t workers = 0) {
    ExperimentConfig cfg;
    cfg.instance.mu = degradation_means();
    cfg.bias.model = BiasSpec::Model::static_adversarial;
    cfg.replications = replications;
    cfg.base_seed = base_seed;
    cfg.c_stat_grid = {1.0};
    std::vector<DegradationRow> out;
    for (double l : profiles) {
        const Cell cell{l, sigma, budget, 1.0};
        const double cap = 4.0 * l + cfg.epsilon;
        const auto o = aggregate(run_cell(cfg, cell, "pac", workers), cfg.rate_mode, cap);
        out.push_back({l, o.pcs, o.mean_selected_mu, cap, o.cap_violation_rate});
    }
    return out;
}

}  // namespace pacmcts
