#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pvd/model.hpp"
#include "pvd/problem.hpp"

namespace pvd {

/// Accuracy-protocol grid: n_inner uniform points on [x0, x_j), the junction
/// point x_j = x0 + eps*xi0, and n_outer uniform points on (x_j, 1],
/// stored ascending (inner block, junction, outer block).
struct EvalGrid {
    std::vector<double> xs;
    int n_inner = 0;
    int n_outer = 0;
    double junction = 0.0;

    int junction_index() const { return n_inner; }
    std::size_t size() const { return xs.size(); }
};

EvalGrid build_eval_grid(const BoundaryLayerProblem& prob, int n_inner = 10000, int n_outer = 100);

/// ||pred - truth||_2 / ||truth||_2. Throws if truth has zero norm.
double relative_l2(std::span<const double> pred, std::span<const double> truth);
/// max |pred - truth|.
double l_inf(std::span<const double> pred, std::span<const double> truth);

struct RegionErrors {
    double global_rel_l2 = 0.0;
    double global_l_inf = 0.0;
    double inner_rel_l2 = 0.0;
    double inner_l_inf = 0.0;
    double junction_abs_err = 0.0;
};

/// Errors of one run. For operator runs `pairs` holds one entry per test
/// pair and the top-level fields are their arithmetic means.
struct ErrorReport {
    std::string method;
    std::string problem;
    std::uint64_t seed = 0;
    double junction_x = 0.0;
    RegionErrors errors;
    std::vector<RegionErrors> pairs;
    bool is_operator = false;
};

/// Pointwise truth on the grid: analytic closed form for the constant case,
/// layer-resolving FDM for the variable case.
std::vector<double> truth_on_grid(const BoundaryLayerProblem& prob, const EvalGrid& grid,
                                  int fdm_nodes = 16384);
/// Same, with the boundary values overridden (operator test pairs).
std::vector<double> truth_on_grid_for_pair(const BoundaryLayerProblem& prob, const EvalGrid& grid,
                                           const std::array<double, 2>& v, int fdm_nodes = 16384);

RegionErrors region_errors(const EvalGrid& grid, std::span<const double> pred,
                           std::span<const double> truth);

/// Composite (or piecewise, for the blpinns method) prediction vs truth.
ErrorReport evaluate_pointwise(const TrainedModel& model, const EvalGrid& grid,
                               std::span<const double> truth, std::uint64_t seed);

/// Per-test-pair evaluation with per-pair ground truth; means over pairs.
ErrorReport evaluate_operator(const TrainedOperator& op, const EvalGrid& grid,
                              std::span<const std::array<double, 2>> test_pairs,
                              std::uint64_t seed, int fdm_nodes = 16384);

/// CSV with columns method,problem,seed,region,metric,value; values printed
/// with 17 significant digits so regeneration is byte-identical.
void write_report_csv(const ErrorReport& report, std::ostream& out);

}  // namespace pvd
