#pragma once

// JSON experiment configs, JSON / JSON-lines run records and the sweep CSV.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "harness.hpp"
#include "oracle.hpp"

namespace pacmcts {

// Malformed configuration; what() names the field (or the parse position).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kCsvSchemaVersion = 1;

namespace io_detail {

using nlohmann::json;

inline std::string path_join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

inline std::uint64_t get_count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw ConfigError(path + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

// Accepts a scalar or an array of numbers.
inline std::vector<double> get_number_list(const json& j, const std::string& path) {
    std::vector<double> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
    } else {
        out.push_back(get_number(j, path));
    }
    return out;
}

inline std::vector<std::uint64_t> get_count_list(const json& j, const std::string& path) {
    std::vector<std::uint64_t> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_count(j[i], path + "[" + std::to_string(i) + "]"));
    } else {
        out.push_back(get_count(j, path));
    }
    return out;
}

inline std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) known = known || it.key() == k;
        if (!known) throw ConfigError(path_join(path, it.key()) + ": unknown field");
    }
}

inline void parse_instance(const json& j, InstanceSpec& out) {
    check_keys(j, "instance", {"kind", "arms", "gap", "baseline", "mu", "tree"});
    if (j.contains("kind")) {
        const auto kind = get_string(j["kind"], "instance.kind");
        if (kind == "flat") out.kind = InstanceSpec::Kind::flat;
        else if (kind == "tree") out.kind = InstanceSpec::Kind::tree;
        else throw ConfigError("instance.kind: expected 'flat' or 'tree'");
    }
    if (j.contains("arms")) out.arms = get_count(j["arms"], "instance.arms");
    if (j.contains("gap")) out.gap = get_number(j["gap"], "instance.gap");
    if (j.contains("baseline")) out.baseline = get_number(j["baseline"], "instance.baseline");
    if (j.contains("mu")) out.mu = get_number_list(j["mu"], "instance.mu");
    if (out.kind == InstanceSpec::Kind::flat) {
        if (out.mu.empty()) {
            if (out.arms < 2) throw ConfigError("instance.arms: need at least 2 arms");
            if (!(out.gap > 0.0)) throw ConfigError("instance.gap: must be > 0");
        } else if (out.mu.size() < 2) {
            throw ConfigError("instance.mu: need at least 2 arms");
        }
    }
    if (j.contains("tree")) {
        const json& t = j["tree"];
        check_keys(t, "instance.tree", {"branching", "depth", "gap", "optimal_path", "discount", "root_value"});
        if (t.contains("branching")) out.tree.branching = get_count(t["branching"], "instance.tree.branching");
        if (t.contains("depth")) out.tree.depth = get_count(t["depth"], "instance.tree.depth");
        if (t.contains("gap")) out.tree.gap = get_number(t["gap"], "instance.tree.gap");
        if (t.contains("discount")) out.tree.discount = get_number(t["discount"], "instance.tree.discount");
        if (t.contains("root_value")) out.tree.root_value = get_number(t["root_value"], "instance.tree.root_value");
        if (t.contains("optimal_path")) {
            out.tree.optimal_path.clear();
            for (auto v : get_count_list(t["optimal_path"], "instance.tree.optimal_path")) out.tree.optimal_path.push_back(v);
        }
    }
    if (out.kind == InstanceSpec::Kind::tree) {
        try {
            out.tree.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("instance.") + e.what());
        }
    }
}

inline void parse_bias(const json& j, BiasSpec& out) {
    check_keys(j, "bias", {"model", "top_k", "offsets", "noise"});
    if (j.contains("model")) {
        const auto m = get_string(j["model"], "bias.model");
        if (m == "unbiased") out.model = BiasSpec::Model::unbiased;
        else if (m == "static_adversarial") out.model = BiasSpec::Model::static_adversarial;
        else if (m == "top_k") out.model = BiasSpec::Model::top_k;
        else if (m == "per_arm") out.model = BiasSpec::Model::per_arm;
        else throw ConfigError("bias.model: expected unbiased | static_adversarial | top_k | per_arm");
    }
    if (j.contains("top_k")) out.top_k = get_count(j["top_k"], "bias.top_k");
    if (j.contains("offsets")) out.offsets = get_number_list(j["offsets"], "bias.offsets");
    if (j.contains("noise")) {
        const auto n = get_string(j["noise"], "bias.noise");
        if (n == "frozen") out.noise = BiasNoise::frozen;
        else if (n == "per_step") out.noise = BiasNoise::per_step;
        else throw ConfigError("bias.noise: expected 'frozen' or 'per_step'");
    }
}

inline const char* to_string(Allocation a) {
    switch (a) {
        case Allocation::automatic: return "auto";
        case Allocation::round_robin: return "round_robin";
        case Allocation::ucb_greedy: return "ucb_greedy";
    }
    return "?";
}

}  // namespace io_detail

/// Parses an experiment config. Every grid field accepts a scalar or an array.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    using namespace io_detail;
    check_keys(j, "", {"instance", "bias", "L", "L_relative", "sigma", "budget", "c_stat", "policies", "replications",
                       "base_seed", "delta", "epsilon", "uct_exploration", "c_bias", "allocation", "min_pulls",
                       "pruning_rate", "max_cells", "efficiency", "comment"});
    ExperimentConfig cfg;
    if (j.contains("instance")) parse_instance(j["instance"], cfg.instance);
    if (j.contains("bias")) parse_bias(j["bias"], cfg.bias);
    if (j.contains("L")) cfg.bias_grid = get_number_list(j["L"], "L");
    if (j.contains("L_relative")) {
        if (!j["L_relative"].is_boolean()) throw ConfigError("L_relative: expected a boolean");
        cfg.bias_relative = j["L_relative"].get<bool>();
    }
    if (j.contains("sigma")) cfg.sigma_grid = get_number_list(j["sigma"], "sigma");
    if (j.contains("budget")) cfg.budget_grid = get_count_list(j["budget"], "budget");
    if (j.contains("c_stat")) cfg.c_stat_grid = get_number_list(j["c_stat"], "c_stat");
    if (j.contains("policies")) {
        const json& p = j["policies"];
        cfg.policies.clear();
        if (p.is_array()) {
            for (std::size_t i = 0; i < p.size(); ++i) cfg.policies.push_back(get_string(p[i], "policies[" + std::to_string(i) + "]"));
        } else {
            cfg.policies.push_back(get_string(p, "policies"));
        }
    }
    if (j.contains("replications")) cfg.replications = get_count(j["replications"], "replications");
    if (j.contains("base_seed")) cfg.base_seed = get_count(j["base_seed"], "base_seed");
    if (j.contains("delta")) cfg.delta = get_number(j["delta"], "delta");
    if (j.contains("epsilon")) cfg.epsilon = get_number(j["epsilon"], "epsilon");
    if (j.contains("uct_exploration")) cfg.uct_exploration = get_number(j["uct_exploration"], "uct_exploration");
    if (j.contains("c_bias")) cfg.c_bias = get_number(j["c_bias"], "c_bias");
    if (j.contains("min_pulls")) cfg.min_pulls = get_count(j["min_pulls"], "min_pulls");
    if (j.contains("max_cells")) cfg.max_cells = get_count(j["max_cells"], "max_cells");
    if (j.contains("allocation")) {
        const auto a = get_string(j["allocation"], "allocation");
        if (a == "auto") cfg.allocation = Allocation::automatic;
        else if (a == "round_robin") cfg.allocation = Allocation::round_robin;
        else if (a == "ucb_greedy") cfg.allocation = Allocation::ucb_greedy;
        else throw ConfigError("allocation: expected auto | round_robin | ucb_greedy");
    }
    if (j.contains("pruning_rate")) {
        const auto r = get_string(j["pruning_rate"], "pruning_rate");
        if (r == "arms") cfg.rate_mode = PruningRateMode::arms;
        else if (r == "budget_saved") cfg.rate_mode = PruningRateMode::budget_saved;
        else throw ConfigError("pruning_rate: expected 'arms' or 'budget_saved'");
    }
    if (j.contains("efficiency")) {
        const json& e = j["efficiency"];
        check_keys(e, "efficiency", {"enabled", "target", "ceiling_factor", "baseline", "candidate"});
        if (e.contains("enabled")) {
            if (!e["enabled"].is_boolean()) throw ConfigError("efficiency.enabled: expected a boolean");
            cfg.efficiency.enabled = e["enabled"].get<bool>();
        }
        if (e.contains("target")) cfg.efficiency.target = get_number(e["target"], "efficiency.target");
        if (e.contains("ceiling_factor")) cfg.efficiency.ceiling_factor = get_number(e["ceiling_factor"], "efficiency.ceiling_factor");
        if (e.contains("baseline")) cfg.efficiency.baseline = get_string(e["baseline"], "efficiency.baseline");
        if (e.contains("candidate")) cfg.efficiency.candidate = get_string(e["candidate"], "efficiency.candidate");
    }
    try {
        cfg.validate();
        for (const Cell& c : cfg.cells()) make_environment(cfg, c, 0);
        if (cfg.efficiency.enabled) {
            parse_policy(cfg.efficiency.baseline);
            parse_policy(cfg.efficiency.candidate);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        // Translate the byte offset into a line number.
        std::ifstream again(path);
        std::string text((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) line += text[i] == '\n';
        throw ConfigError(path + ":" + std::to_string(line) + ": " + e.what());
    }
    return parse_experiment_config(j);
}

inline nlohmann::json to_json(const RunRecord& r) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : r.pruning_events) {
        nlohmann::json ev{{"epoch", e.epoch}, {"arm", e.arm}, {"reason", to_string(e.reason)}};
        if (e.audit_condition) ev["audit_condition"] = *e.audit_condition;
        events.push_back(std::move(ev));
    }
    return nlohmann::json{{"policy", r.policy},
                          {"selected_arm", r.selected_arm},
                          {"selected_true_mu", r.selected_true_mu},
                          {"optimal_value", r.optimal_value},
                          {"correct", r.correct},
                          {"budget", r.budget},
                          {"total_samples", r.total_samples},
                          {"epochs", r.epochs},
                          {"collapsed", r.collapsed},
                          {"optimal_pruned", r.optimal_pruned},
                          {"arms_seen", r.arms_seen},
                          {"max_depth", r.max_depth},
                          {"pruning_rate", r.pruning_rate()},
                          {"pruning_events", std::move(events)},
                          {"final_pulls", r.final_pulls}};
}

inline nlohmann::json to_json(const Cell& c) {
    return nlohmann::json{{"L", c.bias}, {"sigma", c.sigma}, {"budget", c.budget}, {"c_stat", c.c_stat}};
}

inline void write_records_jsonl(std::ostream& out, const std::vector<TaggedRecord>& records) {
    for (const auto& t : records) {
        nlohmann::json j = to_json(t.record);
        j["cell"] = to_json(t.cell);
        j["replication"] = t.replication;
        j["seed"] = t.seed;
        out << j.dump() << '\n';
    }
}

inline constexpr const char* kCsvHeader =
    "policy,L,sigma,budget,c_stat,pcs,pcs_stderr,pruning_rate,mean_selected_mu,mean_samples,efficiency_multiplier";

// Row 1 carries the schema version as a comment; the column order is fixed.
inline void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "# schema_version=" << kCsvSchemaVersion << '\n' << kCsvHeader << '\n';
    char buf[512];
    for (const auto& row : result.rows) {
        std::string eff = "NA";
        if (row.efficiency) {
            if (row.efficiency->censored()) {
                eff = "censored";
            } else {
                char e[64];
                std::snprintf(e, sizeof e, "%.6f", *row.efficiency->multiplier);
                eff = e;
            }
        }
        const auto& o = row.outcome;
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%llu,%.10g,%.6f,%.6f,%.6f,%.6f,%.3f,%s", row.policy.c_str(),
                      row.cell.bias, row.cell.sigma, static_cast<unsigned long long>(row.cell.budget), row.cell.c_stat,
                      o.pcs, o.pcs_stderr, o.pruning_rate, o.mean_selected_mu, o.mean_samples, eff.c_str());
        out << buf << '\n';
    }
}

inline nlohmann::json to_json(const CoverageReport& r) {
    return {{"trials", r.trials}, {"horizon", r.horizon}, {"violations", r.violations},
            {"rate", r.rate},     {"allowance", r.allowance}, {"passed", r.passed}};
}

inline nlohmann::json to_json(const SafetyReport& r) {
    return {{"replays", r.replays},
            {"strict_event_held", r.strict_event_held},
            {"strict_pruning_events", r.strict_pruning_events},
            {"strict_optimal_pruned", r.strict_optimal_pruned},
            {"strict_violations", r.strict_violations},
            {"proportion_elimination_epochs", r.proportion_elimination_epochs},
            {"proportion_audit_failures", r.proportion_audit_failures},
            {"proportion_optimal_pruned", r.proportion_optimal_pruned},
            {"proportion_violations", r.proportion_violations},
            {"passed", r.passed}};
}

inline nlohmann::json to_json(const MinimalityReport& r) {
    return {{"trials", r.trials},
            {"minimal", r.minimal},
            {"solvers_agree", r.solvers_agree},
            {"max_disagreement", r.max_disagreement},
            {"passed", r.passed}};
}

}  // namespace pacmcts
