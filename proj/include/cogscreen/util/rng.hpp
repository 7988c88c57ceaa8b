#pragma once

#include <cstdint>
#include <iterator>
#include <random>
#include <span>
#include <utility>

namespace cogscreen {

/// Seeded generator whose output sequence is identical on every platform
/// (mt19937_64 is fully specified; the distributions here are hand-rolled
/// because the standard ones are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);
    /// Uniform integer in [lo, hi].
    int between(int lo, int hi);
    /// Uniform double in [0, 1).
    double uniform();
    double normal();
    bool chance(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

    template <typename Container>
    const auto& pick(const Container& c) {
        return c[below(std::size(c))];
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace cogscreen
