#pragma once

#include <cstdint>
#include <random>

namespace pvd {

/// Seeded random stream with an explicit uniform mapping.
///
/// std::mt19937_64 output is pinned by the standard; the [0,1) mapping below
/// avoids std::uniform_real_distribution, whose sequences are
/// implementation-defined. Same seed, same doubles, on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Independent child stream (used to give each net its own init stream).
    Rng fork(std::uint64_t salt) {
        return Rng(next_u64() ^ (0x9e3779b97f4a7c15ull * (salt + 1)));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace pvd
