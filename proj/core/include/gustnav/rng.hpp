#pragma once

#include <cstdint>
#include <random>

namespace gustnav {

// Deterministic random source. std::mt19937_64 output is pinned by the
// standard, and all value derivations below use fixed arithmetic, so a seed
// reproduces the same stream on every platform. The std distribution classes
// are deliberately not used (their algorithms are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Unbiased via rejection.
    std::uint64_t uniform_index(std::uint64_t n);

    // Standard normal via Marsaglia polar method (fixed algorithm).
    double normal();

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stateless mix for deriving independent sub-seeds, e.g. one per dataset
// sample or per episode. splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace gustnav
