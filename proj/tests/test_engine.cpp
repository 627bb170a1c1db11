#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pacmcts/engine.hpp"
#include "pacmcts/rng.hpp"

using namespace pacmcts;

namespace {

EngineConfig engine_config(double sigma, double bias, std::uint64_t budget, double c = 1.0, double eps = 0.0) {
    EngineConfig ec;
    ec.confidence = {sigma, 0.05, eps, bias, c};
    ec.budget = budget;
    return ec;
}

// 80 arms: mu* = 1, two near competitors at 0.9, 77 arms spread over [-1, 0].
std::vector<double> high_branching_means() {
    std::vector<double> mu{1.0, 0.9, 0.9};
    for (int i = 0; i < 77; ++i) mu.push_back(-static_cast<double>(i) / 76.0);
    return mu;
}

bool same_decisions(const RunRecord& a, const RunRecord& b) {
    if (a.selected_arm != b.selected_arm || a.total_samples != b.total_samples ||
        a.pruning_events.size() != b.pruning_events.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.pruning_events.size(); ++i) {
        if (a.pruning_events[i].epoch != b.pruning_events[i].epoch || a.pruning_events[i].arm != b.pruning_events[i].arm) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST(Engine, NearNoiselessSelectsOptimum) {
    int correct = 0;
    for (int r = 0; r < 1000; ++r) {
        auto env = make_flat_instance(2, 1.0, bias::Unbiased{}, 0.01, derive_seed(1, "near-noiseless", r));
        correct += run_pac_mcts(env, engine_config(0.01, 0.0, 200)).correct;
    }
    EXPECT_GE(correct, 990);
}

TEST(Engine, NoiselessReturnsExactArgmax) {
    auto env = Environment::flat({0.2, 0.9, 0.5}, bias::Unbiased{}, 0.0, 1);
    const auto rec = run_pac_mcts(env, engine_config(0.0, 0.0, 100));
    EXPECT_EQ(rec.selected_arm, 1u);
    EXPECT_TRUE(rec.correct);
    EXPECT_TRUE(rec.collapsed);
    EXPECT_EQ(rec.total_samples, 3u);
    EXPECT_EQ(rec.pruning_events.size(), 2u);
    EXPECT_DOUBLE_EQ(rec.pruning_rate(), 1.0);
}

TEST(Engine, NoiselessBiasShieldBlocksCloseArms) {
    // Observed means 0.5 (optimum) and 0.6: the shield keeps the optimum alive,
    // the returned arm is wrong but within 4L.
    auto env = Environment::flat({0.6, 0.5, -2.0}, bias::StaticAdversarial{0.1}, 0.0, 1);
    const auto rec = run_pac_mcts(env, engine_config(0.0, 0.1, 30));
    ASSERT_EQ(rec.pruning_events.size(), 1u);
    EXPECT_EQ(rec.pruning_events[0].arm, 2u);
    EXPECT_EQ(rec.total_samples, 30u);
    EXPECT_FALSE(rec.collapsed);
    EXPECT_FALSE(rec.optimal_pruned);
    EXPECT_EQ(rec.selected_arm, 1u);
    EXPECT_LE(rec.suboptimality(), 0.4);
}

TEST(Engine, BudgetIsNeverExceeded) {
    for (std::uint64_t budget : {1u, 7u, 100u, 1001u}) {
        auto env = make_flat_instance(10, 0.1, bias::StaticAdversarial{0.01}, 0.3, budget);
        const auto rec = run_pac_mcts(env, engine_config(0.3, 0.01, budget));
        EXPECT_LE(rec.total_samples, budget);
        std::uint64_t pulls = 0;
        for (auto p : rec.final_pulls) pulls += p;
        EXPECT_EQ(pulls, rec.total_samples);
    }
}

TEST(Engine, MonotonePruningFlat) {
    for (int r = 0; r < 50; ++r) {
        auto env = make_flat_instance(20, 0.3, bias::StaticAdversarial{0.02}, 0.3, derive_seed(2, "monotone", r));
        std::vector<ArmId> prev;
        bool first = true;
        bool shrinking = true;
        const auto rec = run_pac_mcts(env, engine_config(0.3, 0.02, 3000, 0.5), [&](const EpochView& v) {
            std::vector<ArmId> cur(v.active.begin(), v.active.end());
            std::sort(cur.begin(), cur.end());
            if (!first) shrinking = shrinking && std::includes(prev.begin(), prev.end(), cur.begin(), cur.end());
            prev = cur;
            first = false;
        });
        EXPECT_TRUE(shrinking);
        std::set<ArmId> seen;
        for (const auto& e : rec.pruning_events) EXPECT_TRUE(seen.insert(e.arm).second);
        EXPECT_EQ(seen.count(rec.selected_arm), 0u);
    }
}

TEST(Engine, MonotonePruningTree) {
    TreeSpec spec;
    spec.branching = 4;
    spec.depth = 3;
    spec.gap = 0.3;
    for (int r = 0; r < 30; ++r) {
        auto env = Environment::tree(spec, bias::StaticAdversarial{0.02}, 0.2, derive_seed(3, "tree", r));
        std::set<ArmId> pruned;
        std::vector<ArmId> prev;
        bool ok = true;
        const auto rec = run_pac_mcts(env, engine_config(0.2, 0.02, 2000, 0.5), [&](const EpochView& v) {
            for (ArmId a : v.active) {
                ok = ok && pruned.count(a) == 0;
                // every arm is either carried over or a child of a carried-over or expanded arm
                if (std::find(prev.begin(), prev.end(), a) == prev.end() && !prev.empty()) {
                    const auto parent = env.node(a).parent;
                    ok = ok && parent && std::find(prev.begin(), prev.end(), *parent) != prev.end();
                }
            }
            prev.assign(v.active.begin(), v.active.end());
        });
        for (const auto& e : rec.pruning_events) EXPECT_TRUE(pruned.insert(e.arm).second);
        EXPECT_TRUE(ok);
        EXPECT_LE(rec.max_depth, 3u);
    }
}

TEST(Engine, TreeModeFindsOptimalLeafWhenNoiseIsLow) {
    TreeSpec spec;
    spec.branching = 3;
    spec.depth = 3;
    spec.gap = 0.5;
    spec.optimal_path = {2, 1, 0};
    int correct = 0;
    for (int r = 0; r < 100; ++r) {
        auto env = Environment::tree(spec, bias::Unbiased{}, 0.05, derive_seed(4, "tree", r));
        const auto rec = run_pac_mcts(env, engine_config(0.05, 0.0, 500));
        correct += rec.correct;
        EXPECT_EQ(rec.max_depth, 3u);
    }
    EXPECT_GE(correct, 99);
}

TEST(Engine, ScaleEquivariance) {
    const std::vector<double> mu{0.3, 0.1, 0.25, -0.2, 0.0, 0.28};
    for (double k : {2.0, 4.0}) {
        std::vector<double> scaled(mu);
        for (double& v : scaled) v *= k;
        for (int r = 0; r < 40; ++r) {
            const auto seed = derive_seed(5, "scale", r);
            auto a = Environment::flat(mu, bias::StaticAdversarial{0.01}, 0.1, seed);
            auto b = Environment::flat(scaled, bias::StaticAdversarial{0.01 * k}, 0.1 * k, seed);
            const auto ra = run_pac_mcts(a, engine_config(0.1, 0.01, 2000, 0.5, 0.01));
            const auto rb = run_pac_mcts(b, engine_config(0.1 * k, 0.01 * k, 2000, 0.5, 0.01 * k));
            EXPECT_TRUE(same_decisions(ra, rb)) << k << " " << r;
            EXPECT_GT(ra.pruning_events.size(), 0u);
        }
    }
}

TEST(Engine, NaiveCoincidesWithStrictWithoutBias) {
    std::size_t strict_ok = 0, naive_ok = 0;
    const std::size_t reps = 2000;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto seed = derive_seed(6, "naive", r);
        auto a = make_flat_instance(10, 0.1, bias::Unbiased{}, 0.3, seed);
        auto b = make_flat_instance(10, 0.1, bias::Unbiased{}, 0.3, seed);
        const auto ra = run_pac_mcts(a, engine_config(0.3, 0.0, 600, 0.5));
        const auto rb = run_naive_pruning(b, engine_config(0.3, 0.0, 600, 0.5));
        EXPECT_TRUE(same_decisions(ra, rb));
        strict_ok += ra.correct;
        naive_ok += rb.correct;
    }
    // two-proportion z test at alpha = 0.01
    const double p1 = static_cast<double>(strict_ok) / reps, p2 = static_cast<double>(naive_ok) / reps;
    const double p = 0.5 * (p1 + p2);
    const double se = std::sqrt(p * (1 - p) * 2.0 / reps);
    EXPECT_LT(se > 0 ? std::abs(p1 - p2) / se : 0.0, 2.576);
}

TEST(Engine, NaiveIgnoresBiasShield) {
    auto env = Environment::flat({0.6, 0.5, -2.0}, bias::StaticAdversarial{0.1}, 0.0, 1);
    const auto rec = run_naive_pruning(env, engine_config(0.0, 0.1, 30));
    // observed means 0.5 and 0.6: naive prunes the true optimum
    EXPECT_TRUE(rec.optimal_pruned);
    EXPECT_FALSE(rec.correct);
    EXPECT_EQ(rec.pruning_events[0].reason, PruneReason::naive);
}

TEST(Engine, ProportionZeroEqualsNoPruning) {
    for (int r = 0; r < 20; ++r) {
        const auto seed = derive_seed(7, "prop0", r);
        auto a = make_flat_instance(8, 0.2, bias::StaticAdversarial{0.05}, 0.5, seed);
        auto b = make_flat_instance(8, 0.2, bias::StaticAdversarial{0.05}, 0.5, seed);
        const auto ra = run_proportion_pruning(a, engine_config(0.5, 0.05, 400), 0.0);
        EngineConfig none = engine_config(0.5, 0.05, 400);
        none.policy = policy::NoPruning{};
        const auto rb = run_engine(b, none);
        EXPECT_TRUE(same_decisions(ra, rb));
        EXPECT_TRUE(ra.pruning_events.empty());
        EXPECT_EQ(ra.final_pulls, rb.final_pulls);
        for (ArmId i = 0; i < 8; ++i) EXPECT_EQ(ra.final_pulls[i], 50u);
    }
}

TEST(Engine, ProportionEliminatesFloorOfFraction) {
    auto env = Environment::flat({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, bias::Unbiased{}, 0.0, 1);
    const auto rec = run_proportion_pruning(env, engine_config(0.0, 0.0, 10), 0.35);
    ASSERT_EQ(rec.pruning_events.size(), 3u);
    EXPECT_EQ(rec.pruning_events[0].arm, 0u);
    EXPECT_EQ(rec.pruning_events[1].arm, 1u);
    EXPECT_EQ(rec.pruning_events[2].arm, 2u);
    for (const auto& e : rec.pruning_events) {
        EXPECT_EQ(e.reason, PruneReason::proportion);
        ASSERT_TRUE(e.audit_condition.has_value());
        EXPECT_TRUE(*e.audit_condition);
    }
}

TEST(Engine, ProportionSafeWhenAuditHolds) {
    const auto mu = high_branching_means();
    std::size_t epochs = 0, held = 0, correct = 0, unsafe = 0;
    for (int r = 0; r < 1000; ++r) {
        auto env = Environment::flat(mu, bias::StaticAdversarial{0.02}, 0.1, derive_seed(8, "b80", r));
        const auto rec = run_proportion_pruning(env, engine_config(0.1, 0.02, 400), 0.3);
        correct += rec.correct;
        std::uint64_t last = 0;
        for (const auto& e : rec.pruning_events) {
            if (e.epoch != last) {
                ++epochs;
                held += e.audit_condition.value_or(false);
                last = e.epoch;
            }
            if (env.is_optimal(e.arm) && e.audit_condition.value_or(false)) ++unsafe;
        }
    }
    EXPECT_GE(static_cast<double>(held) / static_cast<double>(epochs), 0.99);
    EXPECT_EQ(unsafe, 0u);
    EXPECT_GE(correct, 990u);
}

TEST(Engine, AggressiveProportionCollapses) {
    const auto mu = high_branching_means();
    std::size_t ok3 = 0, ok5 = 0;
    const std::size_t reps = 1000;
    for (std::size_t r = 0; r < reps; ++r) {
        auto a = Environment::flat(mu, bias::StaticAdversarial{0.02}, 0.1, derive_seed(8, "b80", r));
        auto b = Environment::flat(mu, bias::StaticAdversarial{0.02}, 0.1, derive_seed(8, "b80", r));
        ok3 += run_proportion_pruning(a, engine_config(0.1, 0.02, 400), 0.3).correct;
        ok5 += run_proportion_pruning(b, engine_config(0.1, 0.02, 400), 0.5).correct;
    }
    const double p3 = static_cast<double>(ok3) / reps, p5 = static_cast<double>(ok5) / reps;
    const double se = std::sqrt(p3 * (1 - p3) / reps + p5 * (1 - p5) / reps);
    EXPECT_GT(p3 - p5, 3.0 * se);
}

TEST(Engine, RejectsInvalidConfigs) {
    auto env = make_flat_instance(3, 0.1, bias::Unbiased{}, 0.3, 1);
    EngineConfig ec = engine_config(0.3, 0.0, 0);
    EXPECT_THROW(run_engine(env, ec), std::invalid_argument);
    ec = engine_config(0.3, 0.0, 100);
    ec.policy = policy::Proportion{1.0};
    EXPECT_THROW(run_engine(env, ec), std::invalid_argument);
    ec = engine_config(0.3, 0.0, 100);
    ec.dynamic_bias = {true, 0.0};
    EXPECT_THROW(run_engine(env, ec), std::invalid_argument);
}

TEST(DynamicBias, ZeroForEqualMeans) {
    std::vector<ArmStats> stats(3);
    for (auto& s : stats) s.record(0.7);
    const std::vector<ArmId> active{0, 1, 2};
    EXPECT_EQ(estimate_dynamic_bias(active, stats, 2.0), 0.0);
}

TEST(DynamicBias, PopulationStdTimesFactor) {
    std::vector<ArmStats> stats(4);
    stats[0].record(1.0);
    stats[1].record(3.0);
    stats[2].record(100.0);
    const std::vector<ArmId> active{0, 1};
    EXPECT_DOUBLE_EQ(*estimate_dynamic_bias(active, stats, 0.5), 0.5);
    const std::vector<ArmId> with_unpulled{0, 3};
    EXPECT_FALSE(estimate_dynamic_bias(with_unpulled, stats, 1.0).has_value());
    const std::vector<ArmId> single{2};
    EXPECT_FALSE(estimate_dynamic_bias(single, stats, 1.0).has_value());
}

TEST(DynamicBias, NeverExceedsStaticBound) {
    auto env = make_flat_instance(10, 1.0, bias::StaticAdversarial{0.05}, 0.3, 3);
    EngineConfig ec = engine_config(0.3, 0.05, 500);
    ec.dynamic_bias = {true, 10.0};
    bool ok = true;
    const auto rec = run_engine(env, ec, [&](const EpochView& v) { ok = ok && v.bias_used <= 0.05; });
    EXPECT_TRUE(ok);
    EXPECT_EQ(rec.policy, "pac+dynamic");
}

TEST(Uct, NoiselessAlwaysCorrect) {
    for (int r = 0; r < 20; ++r) {
        auto env = Environment::flat({0.1, 0.3, 0.2, 0.25}, bias::Unbiased{}, 0.0, derive_seed(9, "uct", r));
        const auto rec = run_baseline_uct(env, 50, 1.0);
        EXPECT_TRUE(rec.correct);
        EXPECT_EQ(rec.total_samples, 50u);
        EXPECT_TRUE(rec.pruning_events.empty());
    }
}

TEST(Uct, NeedsOnePullPerArm) {
    auto env = make_flat_instance(5, 0.1, bias::Unbiased{}, 0.3, 1);
    EXPECT_THROW(run_baseline_uct(env, 4, 1.0), std::invalid_argument);
    EXPECT_NO_THROW(run_baseline_uct(env, 5, 1.0));
}

TEST(Uct, ExpandsTreesDownToLeaves) {
    TreeSpec spec;
    spec.branching = 2;
    spec.depth = 4;
    spec.gap = 0.5;
    auto env = Environment::tree(spec, bias::Unbiased{}, 0.05, 1);
    const auto rec = run_baseline_uct(env, 400, 0.05);
    EXPECT_EQ(rec.max_depth, 4u);
    EXPECT_TRUE(rec.correct);
}

TEST(Engine, PolicyNames) {
    EXPECT_EQ(policy_name(policy::StrictPAC{}), "pac");
    EXPECT_EQ(policy_name(policy::Naive{}), "naive");
    EXPECT_EQ(policy_name(policy::NoPruning{}), "none");
    EXPECT_EQ(policy_name(policy::Proportion{0.3}), "proportion:0.3");
}
