#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace pacmcts {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable seed for one replication of one grid cell. Depends only on the
// cell key and the replication index, never on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view cell_key,
                                    std::uint64_t replication) noexcept {
    std::uint64_t h = mix64(base_seed ^ 0x5851f42d4c957f2dULL);
    h = mix64(h ^ fnv1a(cell_key));
    return mix64(h + 0x9e3779b97f4a7c15ULL * (replication + 1));
}

/// Counter-based random stream: the n-th draw is mix64(key + n * golden), so
/// any stream is fully determined by its key and independent of other streams.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t key = 0) noexcept : key_(mix64(key)) {}

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform on (0, 1].
    double next_unit() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Uniform on [lo, hi).
    double next_uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * (1.0 - next_unit());
    }

    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double next_gaussian() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(next_unit()));
        const double theta = 2.0 * std::numbers::pi * next_unit();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pacmcts
