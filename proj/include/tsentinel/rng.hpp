#pragma once

#include <cstdint>
#include <random>

namespace tsentinel {

/// Reproducible random source. Bits come from std::mt19937_64, whose output
/// sequence is fixed by the standard; the derived distributions are written
/// out here because the std:: distributions are implementation-defined.
///
///   uniform01:     (bits >> 11) * 2^-53, in [0, 1)
///   uniform_index: rejection sampling on raw 64-bit draws
///   normal:        Box-Muller, the sine branch cached for the next call
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform01();
    /// Uniform on {0, ..., n-1}; n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);
    double normal();

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

} // namespace tsentinel
