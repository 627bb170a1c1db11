// pacmcts: run | sweep | theory | verify
//
// Exit codes: 0 success, 1 a verify property failed, 2 usage or config error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pacmcts/io.hpp"
#include "pacmcts/pacmcts.hpp"

namespace fs = std::filesystem;
using namespace pacmcts;

namespace {

constexpr int kOk = 0;
constexpr int kAssertionFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 0;
    bool force = false;
};

fs::path output_dir(const Common& c) {
    if (!c.out.empty()) return c.out;
    if (const char* env = std::getenv("PACMCTS_OUT"); env && *env) return env;
    return "results";
}

// Creates the directory and checks that none of `files` exist unless forced.
fs::path prepare_output(const Common& c, const std::vector<std::string>& files) {
    const fs::path dir = output_dir(c);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageError(dir.string() + ": cannot create output directory: " + ec.message());
    for (const auto& f : files) {
        if (fs::exists(dir / f) && !c.force) {
            throw UsageError((dir / f).string() + ": exists (use --force to overwrite)");
        }
    }
    return dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError(p.string() + ": cannot open for writing");
    return out;
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_experiment_config(c.config);
    if (c.seed) cfg.base_seed = *c.seed;
    return cfg;
}

class StderrProgress : public ProgressSink {
public:
    void cell_done(std::size_t done, std::size_t total, const SweepRow& row) override {
        std::fprintf(stderr, "[%zu/%zu] %-18s %s  pcs=%.3f prune=%.3f\n", done, total, row.policy.c_str(),
                     row.cell.key().c_str(), row.outcome.pcs, row.outcome.pruning_rate);
    }
};

int cmd_run(const Common& c, const std::string& policy_flag, std::size_t replication) {
    const ExperimentConfig cfg = load(c);
    const std::string policy = policy_flag.empty() ? cfg.policies.front() : policy_flag;
    try {
        parse_policy(policy);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--policy: ") + e.what());
    }
    const fs::path dir = prepare_output(c, {"run.json"});
    const Cell cell = cfg.cells().front();
    const std::uint64_t seed = derive_seed(cfg.base_seed, cell.key(), replication);
    const RunRecord rec = run_replication(cfg, cell, policy, seed);

    nlohmann::json j = to_json(rec);
    j["cell"] = to_json(cell);
    j["replication"] = replication;
    j["seed"] = seed;
    auto out = open_out(dir / "run.json");
    out << j.dump(2) << '\n';

    std::printf("policy        %s\n", rec.policy.c_str());
    std::printf("cell          L=%g sigma=%g N=%llu c_stat=%g\n", cell.bias, cell.sigma,
                static_cast<unsigned long long>(cell.budget), cell.c_stat);
    std::printf("selected arm  %zu (mu %.6g, optimum %.6g) %s\n", rec.selected_arm, rec.selected_true_mu,
                rec.optimal_value, rec.correct ? "correct" : "wrong");
    std::printf("samples       %llu / %llu over %llu epochs\n", static_cast<unsigned long long>(rec.total_samples),
                static_cast<unsigned long long>(rec.budget), static_cast<unsigned long long>(rec.epochs));
    std::printf("pruned        %zu of %zu arms seen\n", rec.pruning_events.size(), rec.arms_seen);
    std::printf("wrote         %s\n", (dir / "run.json").string().c_str());
    return kOk;
}

int cmd_sweep(const Common& c, bool quiet) {
    const ExperimentConfig cfg = load(c);
    const fs::path dir = prepare_output(c, {"sweep.csv", "records.jsonl"});
    StderrProgress progress;
    const SweepResult result = run_sweep(cfg, c.workers, true, quiet ? nullptr : &progress);
    {
        auto out = open_out(dir / "sweep.csv");
        write_sweep_csv(out, result);
    }
    {
        auto out = open_out(dir / "records.jsonl");
        write_records_jsonl(out, result.records);
    }
    std::printf("%zu rows -> %s\n%zu records -> %s\n", result.rows.size(), (dir / "sweep.csv").string().c_str(),
                result.records.size(), (dir / "records.jsonl").string().c_str());
    return kOk;
}

struct TheoryArgs {
    double gap = 0.25, bias = 0.0, sigma = 0.3, delta = 0.05, epsilon = 0.0, c_stat = 1.0;
    std::uint64_t arms = 50, n = 1;
};

int cmd_theory(const TheoryArgs& a) {
    ComplexityInputs in;
    in.gap = a.gap;
    in.frontier_size = a.arms;
    in.config = {a.sigma, a.delta, a.epsilon, a.bias, a.c_stat};
    try {
        in.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto& cfg = in.config;
    std::printf("inputs            gap=%g L=%g sigma=%g delta=%g epsilon=%g M=%llu c_stat=%g\n", a.gap, a.bias,
                a.sigma, a.delta, a.epsilon, static_cast<unsigned long long>(a.arms), a.c_stat);
    std::printf("u_stat(n=%llu)      %.9g\n", static_cast<unsigned long long>(a.n), u_stat(a.n, a.arms, cfg));
    std::printf("u_dist(n=%llu)      %.9g\n", static_cast<unsigned long long>(a.n), u_dist(a.n, a.arms, cfg));
    std::printf("effective gap     %.9g\n", in.effective_gap());
    if (in.feasible()) {
        const auto n = sample_complexity_upper(in);
        std::printf("upper n (search)  %llu\n", static_cast<unsigned long long>(*n));
        try {
            std::printf("upper n (lambert) %llu\n", static_cast<unsigned long long>(*sample_complexity_lambert(in)));
        } catch (const std::domain_error&) {
            std::printf("upper n (lambert) n/a (no lower-branch root)\n");
        }
        std::printf("separation        feasible\n");
    } else {
        std::printf("upper n (search)  none\n");
        std::printf("upper n (lambert) none\n");
        std::printf("separation        infeasible separation (gap - 4L - epsilon = %.9g <= 0)\n", in.separation_margin());
    }
    if (const auto lb = lower_bound_samples(a.gap, cfg)) {
        std::printf("lower bound       %.9g\n", *lb);
        std::printf("identifiability   ok\n");
    } else {
        std::printf("lower bound       none\n");
        std::printf("identifiability   gap structurally reversed (gap + epsilon - 2L = %.9g <= 0)\n",
                    a.gap + a.epsilon - 2.0 * a.bias);
    }
    std::printf("degradation cap   %.9g\n", graceful_degradation_cap(cfg));
    return kOk;
}

struct VerifySuite {
    ConfidenceConfig coverage{0.3, 0.05, 0.0, 0.1, 1.0};
    std::uint64_t coverage_arms = 10;
    std::uint64_t coverage_horizon = 1000;
    std::uint64_t coverage_trials = 10000;
    SafetyReplayConfig safety;
    std::uint64_t minimality_trials = 1000;
    std::uint64_t seed = 1;
};

VerifySuite load_verify_suite(const std::string& path) {
    VerifySuite s;
    if (path.empty()) return s;
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    using namespace io_detail;
    check_keys(j, "", {"coverage", "safety", "minimality", "seed", "comment"});
    if (j.contains("seed")) s.seed = get_count(j["seed"], "seed");
    if (j.contains("coverage")) {
        const auto& c = j["coverage"];
        check_keys(c, "coverage", {"sigma", "delta", "L", "c_stat", "arms", "horizon", "trials"});
        if (c.contains("sigma")) s.coverage.sigma = get_number(c["sigma"], "coverage.sigma");
        if (c.contains("delta")) s.coverage.delta = get_number(c["delta"], "coverage.delta");
        if (c.contains("L")) s.coverage.bias_bound = get_number(c["L"], "coverage.L");
        if (c.contains("c_stat")) s.coverage.radius_factor = get_number(c["c_stat"], "coverage.c_stat");
        if (c.contains("arms")) s.coverage_arms = get_count(c["arms"], "coverage.arms");
        if (c.contains("horizon")) s.coverage_horizon = get_count(c["horizon"], "coverage.horizon");
        if (c.contains("trials")) s.coverage_trials = get_count(c["trials"], "coverage.trials");
        try {
            s.coverage.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("coverage.") + e.what());
        }
    }
    if (j.contains("safety")) {
        const auto& c = j["safety"];
        check_keys(c, "safety", {"mu", "L", "sigma", "budget", "delta", "c_stat", "proportion", "seeds"});
        if (c.contains("mu")) s.safety.mu = get_number_list(c["mu"], "safety.mu");
        if (c.contains("L")) s.safety.bias = get_number(c["L"], "safety.L");
        if (c.contains("sigma")) s.safety.sigma = get_number(c["sigma"], "safety.sigma");
        if (c.contains("budget")) s.safety.budget = get_count(c["budget"], "safety.budget");
        if (c.contains("delta")) s.safety.delta = get_number(c["delta"], "safety.delta");
        if (c.contains("c_stat")) s.safety.c_stat = get_number(c["c_stat"], "safety.c_stat");
        if (c.contains("proportion")) s.safety.proportion = get_number(c["proportion"], "safety.proportion");
        if (c.contains("seeds")) s.safety.seeds = get_count(c["seeds"], "safety.seeds");
    }
    if (j.contains("minimality")) {
        const auto& c = j["minimality"];
        check_keys(c, "minimality", {"trials"});
        if (c.contains("trials")) s.minimality_trials = get_count(c["trials"], "minimality.trials");
    }
    return s;
}

int cmd_verify(const Common& c) {
    VerifySuite suite = load_verify_suite(c.config);
    if (c.seed) suite.seed = *c.seed;
    suite.safety.base_seed = suite.seed;
    const fs::path dir = prepare_output(c, {"verify.json"});

    std::vector<std::string> failed;
    nlohmann::json report;
    try {
        std::fprintf(stderr, "coverage: %llu trials x %llu arms x horizon %llu\n",
                     static_cast<unsigned long long>(suite.coverage_trials),
                     static_cast<unsigned long long>(suite.coverage_arms),
                     static_cast<unsigned long long>(suite.coverage_horizon));
        const auto cov = verify_concentration(suite.coverage, suite.coverage_arms, suite.coverage_horizon,
                                              suite.coverage_trials, suite.seed, c.workers);
        report["coverage"] = to_json(cov);
        if (!cov.passed) failed.push_back("coverage");

        std::fprintf(stderr, "safety replay: %zu seeds\n", suite.safety.seeds);
        const auto safe = verify_safe_pruning_exhaustive(suite.safety, c.workers);
        report["safety"] = to_json(safe);
        if (!safe.passed) failed.push_back("safety");

        std::fprintf(stderr, "complexity minimality: %llu inputs\n",
                     static_cast<unsigned long long>(suite.minimality_trials));
        const auto mini = verify_complexity_minimality(suite.minimality_trials, suite.seed);
        report["minimality"] = to_json(mini);
        if (!mini.passed) failed.push_back("minimality");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    report["passed"] = failed.empty();
    report["failed"] = failed;
    auto out = open_out(dir / "verify.json");
    out << report.dump(2) << '\n';

    for (const char* name : {"coverage", "safety", "minimality"}) {
        const bool ok = std::find(failed.begin(), failed.end(), name) == failed.end();
        std::printf("%-11s %s\n", name, ok ? "PASS" : "FAIL");
    }
    std::printf("wrote %s\n", (dir / "verify.json").string().c_str());
    return failed.empty() ? kOk : kAssertionFailed;
}

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "JSON config file");
    if (config_required) opt->required();
    cmd->add_option("--out", c.out, "output directory (default $PACMCTS_OUT or ./results)");
    cmd->add_option("--seed", c.seed, "override the base seed");
    cmd->add_option("--workers", c.workers, "worker threads (0 = all cores)");
    cmd->add_flag("--force", c.force, "overwrite existing result files");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bias-aware PAC pruning for frontier search"};
    app.require_subcommand(1);

    Common run_opts, sweep_opts, verify_opts;
    std::string policy;
    std::size_t replication = 0;
    auto* run = app.add_subcommand("run", "single replication of one policy, record written as JSON");
    add_common(run, run_opts, true);
    run->add_option("--policy", policy, "policy (default: first in config)");
    run->add_option("--replication", replication, "replication index used for seed derivation");

    bool quiet = false;
    auto* sweep = app.add_subcommand("sweep", "full grid, writes sweep.csv and records.jsonl");
    add_common(sweep, sweep_opts, true);
    sweep->add_flag("--quiet", quiet, "no progress on stderr");

    TheoryArgs t;
    auto* theory = app.add_subcommand("theory", "closed-form radii and bounds");
    theory->add_option("--gap", t.gap, "Delta");
    theory->add_option("--bias", t.bias, "L");
    theory->add_option("--sigma", t.sigma);
    theory->add_option("--delta", t.delta);
    theory->add_option("--epsilon", t.epsilon);
    theory->add_option("--arms", t.arms, "M");
    theory->add_option("--c-stat", t.c_stat);
    theory->add_option("--n", t.n, "sample count for the radii")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "oracle suite, writes verify.json");
    add_common(verify, verify_opts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(run_opts, policy, replication);
        if (*sweep) return cmd_sweep(sweep_opts, quiet);
        if (*theory) return cmd_theory(t);
        if (*verify) return cmd_verify(verify_opts);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kUsage;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
