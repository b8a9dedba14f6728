#include "pvd/collocation.hpp"

#include <stdexcept>

#include "pvd/bc_family.hpp"
#include "pvd/rng.hpp"

namespace pvd {

CollocationSets sample_collocation(const BoundaryLayerProblem& prob, int n_per_region,
                                   std::uint64_t seed) {
    if (n_per_region < 2) {
        throw std::invalid_argument("sample_collocation: need at least 2 points per region");
    }
    Rng rng(seed);
    CollocationSets sets;
    sets.match_x0 = prob.x0;
    sets.match_xi0 = prob.xi0;
    sets.bc_inner_xi = 0.0;
    sets.bc_outer_x = 1.0;
    sets.outer_x.reserve(n_per_region);
    sets.inner_xi.reserve(n_per_region);
    // 1 - u maps [0,1) onto (0,1], keeping x0 itself out of T_o.
    for (int i = 0; i < n_per_region; ++i) {
        sets.outer_x.push_back(prob.x0 + (1.0 - prob.x0) * (1.0 - rng.uniform01()));
    }
    for (int i = 0; i < n_per_region; ++i) {
        sets.inner_xi.push_back(prob.xi0 * rng.uniform01());
    }
    return sets;
}

BcFamily sample_bc_family(const BcBox& box, int n_train, int n_test, std::uint64_t seed) {
    if (!(box.a_hi > box.a_lo) || !(box.b_hi > box.b_lo)) {
        throw std::invalid_argument("sample_bc_family: empty sampling box");
    }
    if (n_train < 1 || n_test < 0) {
        throw std::invalid_argument("sample_bc_family: need n_train >= 1, n_test >= 0");
    }
    Rng rng(seed);
    BcFamily family;
    family.box = box;
    family.train.reserve(n_train);
    family.test.reserve(n_test);
    for (int i = 0; i < n_train; ++i) {
        family.train.push_back({rng.uniform(box.a_lo, box.a_hi), rng.uniform(box.b_lo, box.b_hi)});
    }
    for (int i = 0; i < n_test; ++i) {
        family.test.push_back({rng.uniform(box.a_lo, box.a_hi), rng.uniform(box.b_lo, box.b_hi)});
    }
    return family;
}

}  // namespace pvd
