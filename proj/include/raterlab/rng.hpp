#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "raterlab/errors.hpp"

namespace raterlab {

// Counter-based pseudo-random generator built on the splitmix64 finalizer.
// Every draw is a pure function of (seed, index), so any value in a stream
// can be regenerated independently of the others and results do not depend
// on evaluation order. Normal deviates use Box-Muller, which is exact in
// terms of elementary functions and therefore stable across platforms
// (no rejection loops whose iteration counts could differ).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    // i-th raw 64-bit word of the stream.
    std::uint64_t bits(std::uint64_t i) const {
        std::uint64_t z = seed_ + (i + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // i-th uniform deviate in [0, 1).
    double uniform(std::uint64_t i) const {
        return static_cast<double>(bits(i) >> 11) * 0x1.0p-53;
    }

    // i-th standard normal deviate. Each normal consumes two uniform
    // indices (2i, 2i+1) of a dedicated sub-stream so uniform() and
    // normal() calls never collide for distinct i.
    double normal(std::uint64_t i) const {
        double u1 = uniform(2 * i);
        double u2 = uniform(2 * i + 1);
        // Guard against log(0); 2^-53 keeps the value finite.
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // i-th draw of an integer in [0, n).
    std::uint64_t below(std::uint64_t i, std::uint64_t n) const {
        if (n == 0) throw DomainError("CounterRng::below: n must be positive");
        return static_cast<std::uint64_t>(uniform(i) * static_cast<double>(n));
    }

    // Derive an independent stream, e.g. one per essay or per aspect.
    CounterRng substream(std::uint64_t key) const {
        CounterRng sub(0);
        sub.seed_ = CounterRng(seed_ ^ 0xA5A5A5A5A5A5A5A5ULL).bits(key);
        return sub;
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

} // namespace raterlab
