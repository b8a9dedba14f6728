#include <doctest.h>

#include <cmath>

#include "pvd/fdm.hpp"
#include "pvd/problem.hpp"
#include "pvd/rng.hpp"

using namespace pvd;

TEST_CASE("problem: stretch and its exact inverse") {
    const auto prob = BoundaryLayerProblem::constant_case(1e-3);
    CHECK(stretch(prob, 0.02) == doctest::Approx(20.0).epsilon(1e-14));
    CHECK(stretch(prob, prob.x0) == 0.0);
    Rng rng(3);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform01();
        worst = std::max(worst, std::abs(unstretch(prob, stretch(prob, x)) - x));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("problem: built-in coefficient cases") {
    const auto c = BoundaryLayerProblem::constant_case();
    CHECK(c.a(0.3) == 1.0);
    CHECK(c.b(0.9) == 1.0);
    const auto v = BoundaryLayerProblem::variable_case();
    CHECK(v.a(0.5) == doctest::Approx(1.5));
    CHECK(v.b(0.0) == doctest::Approx(5.0));
    CHECK(v.a_min() == doctest::Approx(1.0));
    CHECK_THROWS_AS(BoundaryLayerProblem::from_key("cubic", 1e-3, 1, 2, 20),
                    std::invalid_argument);
}

TEST_CASE("problem: outer residuals annihilate their kernels") {
    const auto prob = BoundaryLayerProblem::constant_case();
    // e^{-x} solves u' + u = 0.
    for (double x : {0.1, 0.5, 0.9}) {
        const Jet2 u0 = exp(jet_scale(jet_variable(x), -1.0));
        CHECK(std::abs(outer_residual0(prob, x, u0)) <= 1e-15);
    }
    CHECK(outer_residual0(prob, 0.4, Jet2{2.0, 0.0, 0.0}) == doctest::Approx(2.0));
    const auto varp = BoundaryLayerProblem::variable_case();
    CHECK(outer_residual0(varp, 0.0, Jet2{1.0, 0.0, 0.0}) == doctest::Approx(5.0));
}

TEST_CASE("problem: inner residuals") {
    const auto prob = BoundaryLayerProblem::constant_case();
    for (double xi : {0.0, 1.0, 7.5}) {
        const Jet2 psi = exp(jet_scale(jet_variable(xi), -1.0));
        CHECK(std::abs(inner_residual_leading(prob, psi)) <= 1e-15 * (1.0 + std::abs(psi.v)));
    }
    CHECK(inner_residual_leading(prob, Jet2{3.3, 0.0, 0.0}) == 0.0);
    // Assembled u = xi at eps = 1e-3, xi = 1: r = 0 + 1*1 + 1e-3*1*1.
    const Jet2 u_inner = jet_variable(1.0);
    CHECK(inner_residual_full(prob, 1.0, u_inner) == doctest::Approx(1.001).epsilon(1e-12));
}

TEST_CASE("problem: assembled inner surrogate matches the jet algebra") {
    const auto prob = BoundaryLayerProblem::constant_case();
    const Jet2 u0{0.4, -0.2, 0.9}, uc{1.3, 0.5, -0.1}, u1{-0.7, 0.3, 0.2};
    const double xi = 2.5;
    const Jet2 u = assemble_inner(prob, xi, u0, uc, u1);
    const double eps = prob.epsilon;
    CHECK(u.v == doctest::Approx(u0.v + eps * (xi * uc.v + u1.v)).epsilon(1e-15));
    CHECK(u.d1 == doctest::Approx(u0.d1 + eps * (uc.v + xi * uc.d1 + u1.d1)).epsilon(1e-15));
    CHECK(u.d2 == doctest::Approx(u0.d2 + eps * (2 * uc.d1 + xi * uc.d2 + u1.d2)).epsilon(1e-15));
    // At xi = 0 the order-reduction term cannot move the value slot.
    const Jet2 at0a = assemble_inner(prob, 0.0, u0, uc, u1);
    const Jet2 at0b = assemble_inner(prob, 0.0, u0, Jet2{9.9, 9.9, 9.9}, u1);
    CHECK(at0a.v == at0b.v);
}

TEST_CASE("problem: characteristic roots") {
    const auto roots = constant_roots(1e-3);
    CHECK(roots.lambda1 == doctest::Approx(-1.001002).epsilon(1e-5));
    CHECK(roots.lambda2 == doctest::Approx(-998.998999).epsilon(1e-6));
    // Vieta: lambda1 + lambda2 = -1/eps, lambda1 * lambda2 = 1/eps.
    CHECK(roots.lambda1 + roots.lambda2 == doctest::Approx(-1000.0).epsilon(1e-12));
    CHECK(roots.lambda1 * roots.lambda2 == doctest::Approx(1000.0).epsilon(1e-12));
    CHECK_THROWS_AS(constant_roots(0.3), std::invalid_argument);
}

TEST_CASE("problem: analytic constant-coefficient solution") {
    const double eps = 1e-3, alpha = 1.0, beta = 2.0;
    CHECK(analytic_solution_constant(eps, alpha, beta, 0.0) ==
          doctest::Approx(alpha).epsilon(1e-12));
    CHECK(analytic_solution_constant(eps, alpha, beta, 1.0) ==
          doctest::Approx(beta).epsilon(1e-12));
    CHECK(analytic_solution_constant(eps, alpha, beta, 0.5) ==
          doctest::Approx(3.299).epsilon(1e-3));

    // Cross-check against an independent fine-mesh finite-difference solve.
    const auto prob = BoundaryLayerProblem::constant_case(eps, alpha, beta);
    const FdmSolution fdm = fdm_solve(prob, 16384);
    for (double x : {0.01, 0.05, 0.5, 0.77}) {
        CHECK(fdm.eval(x) ==
              doctest::Approx(analytic_solution_constant(eps, alpha, beta, x)).epsilon(1e-5));
    }
}

TEST_CASE("problem: analytic solution satisfies the ODE as a jet") {
    const double eps = 1e-3, alpha = 1.0, beta = 2.0;
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform01();
        const Jet2 u = analytic_solution_constant_jet(eps, alpha, beta, jet_variable(x));
        const double residual = eps * u.d2 + u.d1 + u.v;
        CHECK(std::abs(residual) <= 1e-6 * (1.0 + std::abs(u.v)));
    }
}

TEST_CASE("problem: leading asymptotic oracle") {
    const double eps = 1e-3, alpha = 1.0, beta = 2.0;
    const LeadingAsymptoticOracle oracle{eps, alpha, beta};
    CHECK(oracle.composite(0.0) == doctest::Approx(alpha).epsilon(1e-14));
    CHECK(oracle.composite(1.0) == doctest::Approx(beta).epsilon(1e-8));
    CHECK(oracle.vandyke_uc_target() == doctest::Approx(-5.43656).epsilon(1e-5));
    CHECK(oracle.vandyke_u1_target() == doctest::Approx(5.43656).epsilon(1e-5));
    // First-order outer term solves a u1' + b u1 + u0'' = 0 with u1(1) = 0.
    for (double x : {0.2, 0.6, 1.0}) {
        const double h = 1e-5;
        const double d1 = (oracle.outer1(x + h) - oracle.outer1(x - h)) / (2 * h);
        const double u0pp = oracle.outer0(x);  // (beta e^{1-x})'' = beta e^{1-x}
        CHECK(std::abs(d1 + oracle.outer1(x) + u0pp) <= 1e-6 * (1.0 + u0pp));
    }
    CHECK(oracle.outer1(1.0) == 0.0);

    // O(eps) agreement with the exact solution over a dense grid.
    double sup = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        const double x = static_cast<double>(i) / 20000;
        sup = std::max(sup, std::abs(oracle.composite(x) -
                                     analytic_solution_constant(eps, alpha, beta, x)));
    }
    CHECK(sup <= 10.0 * eps);
}

TEST_CASE("problem: full inner residual is eps-consistent with the leading one") {
    const auto prob = BoundaryLayerProblem::variable_case();
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const Jet2 u0{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const double xi = rng.uniform(0.0, prob.xi0);
        const Jet2 assembled = assemble_inner(prob, xi, u0, Jet2{}, Jet2{});
        const double r_full = inner_residual_full(prob, xi, assembled);
        const double r_lead = inner_residual_leading(prob, u0);
        // a(eps xi) - a(0) = eps xi and the eps b u term: both O(eps).
        const double bound = prob.epsilon * (xi * std::abs(u0.d1) + 5.0 * std::abs(u0.v)) + 1e-12;
        CHECK(std::abs(r_full - r_lead) <= bound);
    }
}
