#include "pvd/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "pvd/fdm.hpp"

namespace pvd {

EvalGrid build_eval_grid(const BoundaryLayerProblem& prob, int n_inner, int n_outer) {
    if (n_inner < 1 || n_outer < 1) throw std::invalid_argument("build_eval_grid: bad point counts");
    EvalGrid grid;
    grid.n_inner = n_inner;
    grid.n_outer = n_outer;
    grid.junction = prob.junction();
    grid.xs.reserve(static_cast<std::size_t>(n_inner) + n_outer + 1);
    for (int i = 0; i < n_inner; ++i) {
        grid.xs.push_back(prob.x0 + (grid.junction - prob.x0) * static_cast<double>(i) / n_inner);
    }
    grid.xs.push_back(grid.junction);
    for (int k = 1; k <= n_outer; ++k) {
        grid.xs.push_back(grid.junction + (1.0 - grid.junction) * static_cast<double>(k) / n_outer);
    }
    return grid;
}

double relative_l2(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("relative_l2: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        num += d * d;
        den += truth[i] * truth[i];
    }
    if (den == 0.0) throw std::domain_error("relative_l2: truth has zero norm");
    return std::sqrt(num / den);
}

double l_inf(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("l_inf: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        m = std::max(m, std::abs(pred[i] - truth[i]));
    }
    return m;
}

std::vector<double> truth_on_grid_for_pair(const BoundaryLayerProblem& prob, const EvalGrid& grid,
                                           const std::array<double, 2>& v, int fdm_nodes) {
    std::vector<double> truth(grid.size());
    if (prob.kind == ProblemKind::constant) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            truth[i] = analytic_solution_constant(prob.epsilon, v[0], v[1], grid.xs[i]);
        }
    } else {
        BoundaryLayerProblem p = prob;
        p.alpha = v[0];
        p.beta = v[1];
        const FdmSolution sol = fdm_solve(p, fdm_nodes);
        for (std::size_t i = 0; i < grid.size(); ++i) truth[i] = sol.eval(grid.xs[i]);
    }
    return truth;
}

std::vector<double> truth_on_grid(const BoundaryLayerProblem& prob, const EvalGrid& grid,
                                  int fdm_nodes) {
    return truth_on_grid_for_pair(prob, grid, {prob.alpha, prob.beta}, fdm_nodes);
}

RegionErrors region_errors(const EvalGrid& grid, std::span<const double> pred,
                           std::span<const double> truth) {
    if (pred.size() != grid.size() || truth.size() != grid.size()) {
        throw std::invalid_argument("region_errors: length mismatch with grid");
    }
    RegionErrors e;
    e.global_rel_l2 = relative_l2(pred, truth);
    e.global_l_inf = l_inf(pred, truth);
    const std::size_t ni = static_cast<std::size_t>(grid.n_inner);
    e.inner_rel_l2 = relative_l2(pred.subspan(0, ni), truth.subspan(0, ni));
    e.inner_l_inf = l_inf(pred.subspan(0, ni), truth.subspan(0, ni));
    const std::size_t j = static_cast<std::size_t>(grid.junction_index());
    e.junction_abs_err = std::abs(pred[j] - truth[j]);
    return e;
}

ErrorReport evaluate_pointwise(const TrainedModel& model, const EvalGrid& grid,
                               std::span<const double> truth, std::uint64_t seed) {
    const std::vector<double> pred = (model.method == MethodKey::blpinns)
                                         ? bl_pinns_eval_batch(model, grid.xs)
                                         : composite_eval_batch(model, grid.xs);
    ErrorReport report;
    report.method = method_key_name(model.method);
    report.problem = model.prob.key();
    report.seed = seed;
    report.junction_x = grid.junction;
    report.errors = region_errors(grid, pred, truth);
    return report;
}

ErrorReport evaluate_operator(const TrainedOperator& op, const EvalGrid& grid,
                              std::span<const std::array<double, 2>> test_pairs,
                              std::uint64_t seed, int fdm_nodes) {
    if (test_pairs.empty()) throw std::invalid_argument("evaluate_operator: no test pairs");
    OperatorGridEvaluator evaluator(op, grid.xs);
    ErrorReport report;
    report.method = method_key_name(op.method);
    report.problem = op.prob.key();
    report.seed = seed;
    report.junction_x = grid.junction;
    report.is_operator = true;
    report.pairs.reserve(test_pairs.size());
    RegionErrors mean;
    for (const auto& v : test_pairs) {
        const std::vector<double> pred = evaluator.eval_pair(v);
        const std::vector<double> truth = truth_on_grid_for_pair(op.prob, grid, v, fdm_nodes);
        const RegionErrors e = region_errors(grid, pred, truth);
        report.pairs.push_back(e);
        mean.global_rel_l2 += e.global_rel_l2;
        mean.global_l_inf += e.global_l_inf;
        mean.inner_rel_l2 += e.inner_rel_l2;
        mean.inner_l_inf += e.inner_l_inf;
        mean.junction_abs_err += e.junction_abs_err;
    }
    const double inv = 1.0 / static_cast<double>(test_pairs.size());
    mean.global_rel_l2 *= inv;
    mean.global_l_inf *= inv;
    mean.inner_rel_l2 *= inv;
    mean.inner_l_inf *= inv;
    mean.junction_abs_err *= inv;
    report.errors = mean;
    return report;
}

namespace {

void report_row(std::ostream& out, const ErrorReport& r, const char* region, const char* metric,
                double value) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%s,%s,%.17g\n", r.method.c_str(),
                  r.problem.c_str(), static_cast<unsigned long long>(r.seed), region, metric,
                  value);
    out << buf;
}

}  // namespace

void write_report_csv(const ErrorReport& report, std::ostream& out) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "# junction x_j = x0 + eps*xi0 = %.17g\n", report.junction_x);
    out << buf;
    out << "method,problem,seed,region,metric,value\n";
    const char* prefix = report.is_operator ? "mean_" : "";
    const auto& e = report.errors;
    report_row(out, report, "global", (std::string(prefix) + "rel_l2").c_str(), e.global_rel_l2);
    report_row(out, report, "global", (std::string(prefix) + "l_inf").c_str(), e.global_l_inf);
    report_row(out, report, "inner", (std::string(prefix) + "rel_l2").c_str(), e.inner_rel_l2);
    report_row(out, report, "inner", (std::string(prefix) + "l_inf").c_str(), e.inner_l_inf);
    report_row(out, report, "junction", (std::string(prefix) + "abs_err").c_str(),
               e.junction_abs_err);
    if (report.is_operator) {
        for (std::size_t i = 0; i < report.pairs.size(); ++i) {
            char metric[48];
            const auto& p = report.pairs[i];
            std::snprintf(metric, sizeof(metric), "pair%03zu_rel_l2", i);
            report_row(out, report, "global", metric, p.global_rel_l2);
            std::snprintf(metric, sizeof(metric), "pair%03zu_l_inf", i);
            report_row(out, report, "global", metric, p.global_l_inf);
            std::snprintf(metric, sizeof(metric), "pair%03zu_junction_abs_err", i);
            report_row(out, report, "junction", metric, p.junction_abs_err);
        }
    }
}

}  // namespace pvd
