#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "lzspa/errors.hpp"

namespace lzspa {

/// SplitMix64 step; used to mix seeds into well-separated streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives the seed of stream `index` from a master seed. Streams for
/// distinct indices are independent for all practical purposes, which is
/// what makes parallel generation order-independent.
inline std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s ^= index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9e3779b97f4a7c15ULL);
}

/// Deterministic random stream. Backed by std::mt19937_64, whose output
/// sequence is fixed by the standard, so identical seeds reproduce
/// identical draws on every platform. All derived draws below avoid
/// std::*_distribution, whose outputs are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t next_index(std::uint64_t n) {
        if (n == 0)
            throw InvalidArgument("next_index: n must be positive");
        const std::uint64_t limit = n * (UINT64_MAX / n);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    /// Draws an index from an unnormalized weight vector.
    std::size_t next_categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0))
            throw InvalidArgument("next_categorical: weights sum to zero");
        double u = next_double() * total;
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            acc += weights[i];
            last_positive = i;
            if (u < acc) return i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace lzspa
