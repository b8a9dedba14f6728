#pragma once

#include <iosfwd>
#include <vector>

#include "pvd/problem.hpp"

namespace pvd {

/// Finite-difference ground truth on a layer-resolving mesh.
///
/// Nodal boundary values are imposed exactly; interpolation between nodes is
/// monotone cubic (Fritsch-Carlson), which reproduces nodal values exactly
/// and linear data identically.
struct FdmSolution {
    std::vector<double> nodes;   // strictly increasing, nodes.front()=0, back()=1
    std::vector<double> values;  // nodal solution, values[0]=alpha, back()=beta
    std::vector<double> slopes;  // monotone cubic slopes at the nodes
    double transition = 0.0;     // Shishkin transition point tau
    double max_scaled_residual = 0.0;  // |A u - f|_inf of the solved (row-scaled) system

    /// Monotone cubic interpolation; exact at nodes. Throws outside [0,1].
    double eval(double x) const;
};

/// Solves eps u'' + a u' + b u = 0 with u(0)=alpha, u(1)=beta by central
/// differences on a Shishkin piecewise-uniform mesh with transition
/// tau = min(1/2, (2 eps / a_min) ln N) and half the nodes inside [0, tau].
///
/// Requires N >= 1000 and a left-side layer (a > 0). Throws if the layer
/// part of the mesh would span fewer than 8 nodes or if the tridiagonal
/// solve hits a zero pivot.
FdmSolution fdm_solve(const BoundaryLayerProblem& prob, int n_nodes);

/// Audit export: one "x,u" row per node.
void fdm_export_csv(const FdmSolution& sol, std::ostream& out);

/// Fritsch-Carlson monotone cubic slopes (exposed for interpolation tests).
std::vector<double> monotone_cubic_slopes(const std::vector<double>& nodes,
                                          const std::vector<double>& values);

}  // namespace pvd
