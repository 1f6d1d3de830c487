#pragma once

#include <cstdint>
#include <random>

namespace folopt {

/// Thin wrapper over std::mt19937_64 that derives doubles from raw
/// 64-bit draws, so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Child generator for work item `index`; deterministic regardless of
    /// scheduling, used to parallelize randomized trials.
    static Rng child(std::uint64_t seed, std::uint64_t index) {
        // splitmix64 of the pair keeps child streams decorrelated.
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return Rng(z ^ (z >> 31));
    }

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return eng_() % n; }

private:
    std::mt19937_64 eng_;
};

}  // namespace folopt
