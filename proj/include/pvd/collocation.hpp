#pragma once

#include <cstdint>
#include <vector>

#include "pvd/problem.hpp"

namespace pvd {

/// Residual point sets: T_o in x over (x0, 1], T_i in xi over [0, xi0],
/// matching points {x0, xi0}, boundary points {xi = 0, x = 1}.
struct CollocationSets {
    std::vector<double> outer_x;
    std::vector<double> inner_xi;
    double match_x0 = 0.0;
    double match_xi0 = 20.0;
    double bc_inner_xi = 0.0;
    double bc_outer_x = 1.0;
};

/// Uniform i.i.d. sampling, deterministic per seed; n >= 2 points per region.
CollocationSets sample_collocation(const BoundaryLayerProblem& prob, int n_per_region,
                                   std::uint64_t seed);

}  // namespace pvd
