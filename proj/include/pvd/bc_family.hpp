#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace pvd {

/// Sampling box for the boundary-value pairs (a, b) = (u(0), u(1)).
struct BcBox {
    double a_lo = 0.4;
    double a_hi = 1.4;
    double b_lo = 1.5;
    double b_hi = 2.5;
};

/// Train/test boundary-condition pairs drawn from one seeded stream
/// (train first, then test, so the two sets are disjoint by construction).
struct BcFamily {
    BcBox box;
    std::vector<std::array<double, 2>> train;
    std::vector<std::array<double, 2>> test;
};

BcFamily sample_bc_family(const BcBox& box, int n_train, int n_test, std::uint64_t seed);

}  // namespace pvd
