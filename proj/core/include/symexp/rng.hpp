#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace symexp {

// Portable random draws: std:: distributions are implementation-defined, so
// results would differ between standard libraries for the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r = 0;
        do {
            r = engine_();
        } while (r >= limit);
        return r % bound;
    }

    /// Uniform integer in [lo, hi].
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    /// Uniform k-subset of {0..n-1}, returned in ascending order.
    std::vector<std::size_t> subset(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

/// Derives independent stream seeds from a master seed.
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace symexp
