#include "pvd/problem.hpp"

namespace pvd {

BoundaryLayerProblem BoundaryLayerProblem::constant_case(double epsilon, double alpha, double beta,
                                                         double xi0) {
    if (!(epsilon > 0.0) || !(xi0 > 0.0)) {
        throw std::invalid_argument("BoundaryLayerProblem: need epsilon > 0 and xi0 > 0");
    }
    BoundaryLayerProblem prob;
    prob.kind = ProblemKind::constant;
    prob.epsilon = epsilon;
    prob.alpha = alpha;
    prob.beta = beta;
    prob.xi0 = xi0;
    return prob;
}

BoundaryLayerProblem BoundaryLayerProblem::variable_case(double epsilon, double alpha, double beta,
                                                         double xi0) {
    BoundaryLayerProblem prob = constant_case(epsilon, alpha, beta, xi0);
    prob.kind = ProblemKind::variable;
    return prob;
}

BoundaryLayerProblem BoundaryLayerProblem::from_key(const std::string& key, double epsilon,
                                                    double alpha, double beta, double xi0) {
    if (key == "constant") return constant_case(epsilon, alpha, beta, xi0);
    if (key == "variable") return variable_case(epsilon, alpha, beta, xi0);
    throw std::invalid_argument("unknown problem key: " + key);
}

CharacteristicRoots constant_roots(double epsilon) {
    if (!(epsilon > 0.0) || epsilon >= 0.25) {
        throw std::invalid_argument("constant_roots: need 0 < eps < 1/4 (real roots)");
    }
    const double disc = std::sqrt(1.0 - 4.0 * epsilon);
    return {-2.0 / (1.0 + disc), (-1.0 - disc) / (2.0 * epsilon)};
}

double analytic_solution_constant(double epsilon, double alpha, double beta, double x) {
    const auto [l1, l2] = constant_roots(epsilon);
    const double e1 = std::exp(l1);
    const double e2 = std::exp(l2);
    const double denom = e1 - e2;
    const double c1 = (beta - alpha * e2) / denom;
    const double c2 = (alpha * e1 - beta) / denom;
    return c1 * std::exp(l1 * x) + c2 * std::exp(l2 * x);
}

Jet2 analytic_solution_constant_jet(double epsilon, double alpha, double beta, const Jet2& x) {
    const auto [l1, l2] = constant_roots(epsilon);
    const double e1 = std::exp(l1);
    const double e2 = std::exp(l2);
    const double denom = e1 - e2;
    const double c1 = (beta - alpha * e2) / denom;
    const double c2 = (alpha * e1 - beta) / denom;
    return jet_scale(exp(jet_scale(x, l1)), c1) + jet_scale(exp(jet_scale(x, l2)), c2);
}

}  // namespace pvd
