#pragma once

// Ground-truth arm models, bias injection and the seeded observation stream.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "rng.hpp"

namespace pacmcts {

using ArmId = std::size_t;

struct ArmTruth {
    ArmId arm_id = 0;
    double mu = 0.0;
};

struct ArmStats {
    ArmId arm_id = 0;
    std::uint64_t pulls = 0;
    double sum = 0.0;

    void record(double value) {
        ++pulls;
        sum += value;
    }
    // Undefined (NaN) before the first pull.
    double mean() const {
        return pulls == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(pulls);
    }
};

// Bias models. Every produced offset satisfies |offset| <= L.
namespace bias {
struct Unbiased {};
// Optimal arm -L, every other arm +L.
struct StaticAdversarial {
    double bound = 0.0;
};
// Optimal arm -L, the k best suboptimal arms +L, the rest unbiased.
struct TopKAdversarial {
    double bound = 0.0;
    std::size_t k = 5;
};
// User-supplied offsets, each within [-bound, bound].
struct PerArmVector {
    double bound = 0.0;
    std::vector<double> offsets;
};
}  // namespace bias

using BiasModel = std::variant<bias::Unbiased, bias::StaticAdversarial, bias::TopKAdversarial, bias::PerArmVector>;

inline double bias_bound_of(const BiasModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, bias::Unbiased>) {
                return 0.0;
            } else {
                return m.bound;
            }
        },
        model);
}

inline bool requires_unique_optimum(const BiasModel& model) {
    return std::holds_alternative<bias::StaticAdversarial>(model) ||
           std::holds_alternative<bias::TopKAdversarial>(model);
}

// Lowest index among the maxima.
inline ArmId optimal_arm(std::span<const double> mu) {
    if (mu.empty()) throw std::invalid_argument("optimal_arm: empty arm set");
    return static_cast<ArmId>(std::max_element(mu.begin(), mu.end()) - mu.begin());
}

/// Frozen per-arm offsets for a flat arm set.
inline std::vector<double> bias_offsets(const BiasModel& model, std::span<const double> mu) {
    const double bound = bias_bound_of(model);
    if (!(bound >= 0.0) || !std::isfinite(bound)) throw std::invalid_argument("bias.L: must be finite and >= 0");
    std::vector<double> offsets(mu.size(), 0.0);
    if (mu.empty()) return offsets;
    const ArmId best = optimal_arm(mu);

    if (std::holds_alternative<bias::StaticAdversarial>(model)) {
        std::fill(offsets.begin(), offsets.end(), bound);
        offsets[best] = -bound;
    } else if (const auto* topk = std::get_if<bias::TopKAdversarial>(&model)) {
        std::vector<ArmId> order;
        for (ArmId i = 0; i < mu.size(); ++i) {
            if (i != best) order.push_back(i);
        }
        // Largest mu first; ties resolved by lower index.
        std::stable_sort(order.begin(), order.end(), [&](ArmId a, ArmId b) { return mu[a] > mu[b]; });
        const std::size_t boosted = std::min(topk->k, order.size());
        for (std::size_t i = 0; i < boosted; ++i) offsets[order[i]] = bound;
        offsets[best] = -bound;
    } else if (const auto* vec = std::get_if<bias::PerArmVector>(&model)) {
        if (vec->offsets.size() != mu.size()) {
            throw std::invalid_argument("bias.offsets: expected " + std::to_string(mu.size()) + " entries, got " +
                                        std::to_string(vec->offsets.size()));
        }
        for (std::size_t i = 0; i < mu.size(); ++i) {
            if (!(std::abs(vec->offsets[i]) <= bound)) {
                throw std::invalid_argument("bias.offsets[" + std::to_string(i) + "]: |offset| exceeds L");
            }
        }
        offsets = vec->offsets;
    }
    return offsets;
}

enum class BiasNoise {
    frozen,    // offset fixed per arm for the whole replication
    per_step,  // each observation draws its offset uniformly from [-L, L]
};

struct TreeSpec {
    std::size_t branching = 2;
    std::size_t depth = 1;
    double gap = 0.1;
    std::vector<std::size_t> optimal_path;  // designated child index per level; missing levels use 0
    double discount = 1.0;                  // gamma in (0, 1]
    double root_value = 1.0;

    void validate() const {
        if (branching < 2) throw std::invalid_argument("tree.branching: must be >= 2");
        if (depth < 1) throw std::invalid_argument("tree.depth: must be >= 1");
        if (!(gap > 0.0)) throw std::invalid_argument("tree.gap: must be > 0");
        if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("tree.discount: must lie in (0, 1]");
        for (std::size_t i = 0; i < optimal_path.size(); ++i) {
            if (optimal_path[i] >= branching) {
                throw std::invalid_argument("tree.optimal_path[" + std::to_string(i) + "]: index >= branching");
            }
        }
    }
    std::size_t designated_child(std::size_t level) const {
        return level < optimal_path.size() ? optimal_path[level] : 0;
    }
};

struct Observation {
    ArmId arm_id = 0;
    double value = 0.0;
    std::uint64_t epoch = 0;
};

/// One replication's environment: a flat arm set or a lazily expanded tree.
/// Everything except the random stream is fixed at construction; expansion
/// only materialises nodes whose values and offsets are already determined.
class Environment {
public:
    struct Node {
        std::optional<ArmId> parent;
        std::size_t depth = 0;
        std::size_t child_index = 0;
        double mu = 0.0;
        double offset = 0.0;
        bool on_optimal_path = false;
        std::vector<ArmId> children;
    };

    static Environment flat(std::vector<double> mu, const BiasModel& model, double sigma, std::uint64_t seed,
                            BiasNoise noise = BiasNoise::frozen) {
        if (mu.size() < 2) throw std::invalid_argument("instance.arms: need at least 2 arms");
        check_sigma(sigma);
        for (std::size_t i = 0; i < mu.size(); ++i) {
            if (!std::isfinite(mu[i])) throw std::invalid_argument("instance.mu[" + std::to_string(i) + "]: not finite");
        }
        const ArmId best = optimal_arm(mu);
        if (requires_unique_optimum(model) && std::count(mu.begin(), mu.end(), mu[best]) > 1) {
            throw std::invalid_argument("instance.mu: adversarial bias models need a unique optimum");
        }
        const auto offsets = bias_offsets(model, mu);

        Environment env(model, sigma, seed, noise);
        env.nodes_.reserve(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
            Node node;
            node.depth = 1;
            node.child_index = i;
            node.mu = mu[i];
            node.offset = offsets[i];
            node.on_optimal_path = (i == best);
            env.nodes_.push_back(std::move(node));
            env.frontier_.push_back(i);
        }
        env.optimal_value_ = mu[best];
        return env;
    }

    static Environment tree(const TreeSpec& spec, const BiasModel& model, double sigma, std::uint64_t seed,
                            BiasNoise noise = BiasNoise::frozen) {
        spec.validate();
        check_sigma(sigma);
        if (std::holds_alternative<bias::PerArmVector>(model)) {
            throw std::invalid_argument("bias.model: per-arm offsets are only defined for flat instances");
        }
        Environment env(model, sigma, seed, noise);
        env.tree_ = spec;
        Node root;
        root.mu = spec.root_value;
        root.on_optimal_path = true;
        env.nodes_.push_back(std::move(root));
        env.frontier_ = env.expand(0);
        env.optimal_value_ = spec.root_value * std::pow(spec.discount, static_cast<double>(spec.depth));
        return env;
    }

    bool is_tree() const { return tree_.has_value(); }
    const std::vector<ArmId>& initial_frontier() const { return frontier_; }
    std::size_t node_count() const { return nodes_.size(); }
    const Node& node(ArmId id) const { return nodes_.at(id); }

    double mu(ArmId id) const { return nodes_.at(id).mu; }
    double offset(ArmId id) const { return nodes_.at(id).offset; }
    // Conditional mean of an observation.
    double observation_mean(ArmId id) const { return noise_ == BiasNoise::frozen ? mu(id) + offset(id) : mu(id); }
    double sigma() const { return sigma_; }
    double bias_bound() const { return bias_bound_of(model_); }
    std::size_t depth(ArmId id) const { return nodes_.at(id).depth; }

    // Flat: the lowest-index maximal arm. Tree: any node on the optimal path.
    bool is_optimal(ArmId id) const { return nodes_.at(id).on_optimal_path; }
    // mu* (flat) or the value of the optimal leaf (tree).
    double optimal_value() const { return optimal_value_; }

    bool can_expand(ArmId id) const { return tree_ && nodes_.at(id).depth < tree_->depth; }

    /// Children of `id`: the designated child keeps gamma * parent value, its
    /// siblings sit at gamma * parent value - gap. Repeated calls return the
    /// same ids.
    std::vector<ArmId> expand(ArmId id) {
        if (!can_expand(id)) throw std::logic_error("expand: node " + std::to_string(id) + " is a leaf");
        if (!nodes_[id].children.empty()) return nodes_[id].children;
        const TreeSpec& spec = *tree_;
        const std::size_t level = nodes_[id].depth;
        const std::size_t designated = spec.designated_child(level);
        const double base = spec.discount * nodes_[id].mu;
        const double bound = bias_bound();
        const auto* topk = std::get_if<bias::TopKAdversarial>(&model_);
        const bool adversarial = requires_unique_optimum(model_);

        std::vector<ArmId> kids;
        std::size_t boosted = 0;
        for (std::size_t c = 0; c < spec.branching; ++c) {
            Node child;
            child.parent = id;
            child.depth = level + 1;
            child.child_index = c;
            const bool best = (c == designated);
            child.mu = best ? base : base - spec.gap;
            child.on_optimal_path = best && nodes_[id].on_optimal_path;
            if (adversarial) {
                if (best) {
                    child.offset = -bound;
                } else if (!topk || boosted < topk->k) {
                    child.offset = bound;
                    ++boosted;
                }
            }
            kids.push_back(nodes_.size());
            nodes_.push_back(std::move(child));
        }
        nodes_[id].children = kids;
        return kids;
    }

    /// Y = mu + offset + sigma * z; advances the stream by one Gaussian draw
    /// (plus one uniform in per-step bias mode).
    Observation sample(ArmId id, std::uint64_t epoch = 0) {
        const Node& n = nodes_.at(id);
        double offset = n.offset;
        if (noise_ == BiasNoise::per_step) {
            const double bound = bias_bound();
            offset = bound > 0.0 ? stream_.next_uniform(-bound, bound) : 0.0;
        }
        const double z = stream_.next_gaussian();
        return Observation{id, n.mu + offset + sigma_ * z, epoch};
    }

    std::vector<ArmTruth> truths() const {
        std::vector<ArmTruth> out;
        for (ArmId i = 0; i < nodes_.size(); ++i) out.push_back({i, nodes_[i].mu});
        return out;
    }

private:
    Environment(BiasModel model, double sigma, std::uint64_t seed, BiasNoise noise)
        : model_(std::move(model)), sigma_(sigma), noise_(noise), stream_(seed) {}

    static void check_sigma(double sigma) {
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma: must be finite and >= 0");
    }

    BiasModel model_;
    double sigma_;
    BiasNoise noise_;
    RandomStream stream_;
    std::optional<TreeSpec> tree_;
    std::vector<Node> nodes_;
    std::vector<ArmId> frontier_;
    double optimal_value_ = 0.0;
};

// Single-gap instance: arm 0 at baseline + gap, the rest at baseline.
inline std::vector<double> single_gap_means(std::size_t m_count, double gap, double baseline = 0.0) {
    if (m_count < 2) throw std::invalid_argument("instance.arms: need at least 2 arms");
    if (!(gap > 0.0)) throw std::invalid_argument("instance.gap: must be > 0");
    std::vector<double> mu(m_count, baseline);
    mu[0] = baseline + gap;
    return mu;
}

inline Environment make_flat_instance(std::size_t m_count, double gap, const BiasModel& model, double sigma,
                                      std::uint64_t seed, BiasNoise noise = BiasNoise::frozen) {
    return Environment::flat(single_gap_means(m_count, gap), model, sigma, seed, noise);
}

}  // namespace pacmcts
