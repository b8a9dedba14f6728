#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "pvd/jet.hpp"

namespace pvd {

enum class ProblemKind { constant, variable };

enum class LayerSide { left, right };

/// Singularly perturbed two-point boundary value problem on [0,1]:
///   eps u'' + a(x) u' + b(x) u = 0,  u(0) = alpha, u(1) = beta.
///
/// Coefficient functions are built-in named cases selected by kind:
///   constant: a = 1, b = 1
///   variable: a = x + 1, b = 5 cos(5x)
/// Both have a > 0 on [0,1], so the layer sits at x0 = 0 (side = left). The
/// right-side case (a < 0, layer at x = 1) is representable but no shipped
/// experiment exercises it.
struct BoundaryLayerProblem {
    ProblemKind kind = ProblemKind::constant;
    LayerSide side = LayerSide::left;
    double epsilon = 1e-3;
    double alpha = 1.0;
    double beta = 2.0;
    double x0 = 0.0;    // boundary-layer location
    double xi0 = 20.0;  // inner-domain truncation (stands in for +infinity)

    static BoundaryLayerProblem constant_case(double epsilon = 1e-3, double alpha = 1.0,
                                              double beta = 2.0, double xi0 = 20.0);
    static BoundaryLayerProblem variable_case(double epsilon = 1e-3, double alpha = 1.0,
                                              double beta = 2.0, double xi0 = 20.0);
    static BoundaryLayerProblem from_key(const std::string& key, double epsilon, double alpha,
                                         double beta, double xi0);

    double a(double x) const {
        return kind == ProblemKind::constant ? 1.0 : x + 1.0;
    }
    double b(double x) const {
        return kind == ProblemKind::constant ? 1.0 : 5.0 * std::cos(5.0 * x);
    }
    /// Minimum of a on [0,1]; both built-in cases attain it at x = 0.
    double a_min() const { return a(0.0); }

    const char* key() const { return kind == ProblemKind::constant ? "constant" : "variable"; }

    /// Inner/outer junction x_j = x0 + eps * xi0 (the inner training horizon
    /// mapped back to x).
    double junction() const { return x0 + epsilon * xi0; }
};

/// Stretched variable xi = (x - x0) / eps.
inline double stretch(const BoundaryLayerProblem& prob, double x) {
    return (x - prob.x0) / prob.epsilon;
}

/// Exact inverse of stretch: x = eps * xi + x0.
inline double unstretch(const BoundaryLayerProblem& prob, double xi) {
    return prob.epsilon * xi + prob.x0;
}

// ---------------------------------------------------------------------------
// Residual operators (orders 0 and 1, both regions)
// ---------------------------------------------------------------------------

/// Leading outer residual a(x) u0' + b(x) u0.
template <class S>
S outer_residual0(const BoundaryLayerProblem& prob, double x, const JetT<S>& u0) {
    return S(prob.a(x)) * u0.d1 + S(prob.b(x)) * u0.v;
}

/// First-order outer residual a(x) u1' + b(x) u1 + u0'' (the forcing -u0''
/// moved to the left side).
template <class S>
S outer_residual1(const BoundaryLayerProblem& prob, double x, const JetT<S>& u0,
                  const JetT<S>& u1) {
    return S(prob.a(x)) * u1.d1 + S(prob.b(x)) * u1.v + u0.d2;
}

/// Leading inner residual psi0'' + a(x0) psi0' (derivatives w.r.t. xi).
template <class S>
S inner_residual_leading(const BoundaryLayerProblem& prob, const JetT<S>& psi0) {
    return psi0.d2 + S(prob.a(prob.x0)) * psi0.d1;
}

/// Two-term inner surrogate u_i = u0 + eps * (xi * uc + u1), assembled as a
/// jet in xi so all derivatives stay consistent.
template <class S>
JetT<S> assemble_inner(const BoundaryLayerProblem& prob, double xi, const JetT<S>& u0,
                       const JetT<S>& uc, const JetT<S>& u1) {
    const JetT<S> xi_jet = jet_variable(S(xi));
    return u0 + jet_scale(xi_jet * uc + u1, prob.epsilon);
}

/// Full inner residual of the assembled surrogate:
///   u'' + a(eps xi + x0) u' + eps b(eps xi + x0) u, derivatives w.r.t. xi.
template <class S>
S inner_residual_full(const BoundaryLayerProblem& prob, double xi, const JetT<S>& u_inner) {
    const double x = unstretch(prob, xi);
    return u_inner.d2 + S(prob.a(x)) * u_inner.d1 + S(prob.epsilon * prob.b(x)) * u_inner.v;
}

// ---------------------------------------------------------------------------
// Constant-coefficient ground truth and the leading asymptotic oracle
// ---------------------------------------------------------------------------

struct CharacteristicRoots {
    double lambda1;  // slow root, about -(1 + eps)
    double lambda2;  // fast root, about -1/eps
};

/// Roots of eps r^2 + r + 1 = 0, with lambda1 rationalized to avoid the
/// cancellation in (-1 + sqrt(1-4 eps)) / (2 eps). Requires eps < 1/4.
CharacteristicRoots constant_roots(double epsilon);

/// Closed-form solution of eps u'' + u' + u = 0, u(0)=alpha, u(1)=beta.
/// Both roots are negative, so every exponential here has a non-positive
/// argument on [0,1]: e^{lambda2} underflows to zero harmlessly and nothing
/// can overflow.
double analytic_solution_constant(double epsilon, double alpha, double beta, double x);

/// Jet-valued evaluation of the same closed form (for residual checks).
Jet2 analytic_solution_constant_jet(double epsilon, double alpha, double beta, const Jet2& x);

/// Leading-order matched-expansion composite for the constant case:
///   beta e^{1-x} + (alpha - beta e) e^{-x/eps}
/// plus the first-order outer term and the Van Dyke far-field targets used
/// by the high-order checks.
struct LeadingAsymptoticOracle {
    double epsilon, alpha, beta;

    double composite(double x) const {
        return beta * std::exp(1.0 - x) + (alpha - beta * std::exp(1.0)) * std::exp(-x / epsilon);
    }
    double outer0(double x) const { return beta * std::exp(1.0 - x); }
    double inner0(double xi) const {
        return beta * std::exp(1.0) + (alpha - beta * std::exp(1.0)) * std::exp(-xi);
    }
    /// First-order outer term beta (1-x) e^{1-x}.
    double outer1(double x) const { return beta * (1.0 - x) * std::exp(1.0 - x); }
    /// Van Dyke targets: u_c(inf) = -beta e, u_1(inf) = +beta e.
    double vandyke_uc_target() const { return -beta * std::exp(1.0); }
    double vandyke_u1_target() const { return beta * std::exp(1.0); }
};

}  // namespace pvd
