#include <doctest.h>

#include <cmath>
#include <vector>

#include "pvd/collocation.hpp"
#include "pvd/model.hpp"
#include "pvd/tape.hpp"

using namespace pvd;
using ad::Var;

TEST_CASE("tape: gradient of theta^2") {
    const std::vector<double> params = {3.0};
    const auto grad = ad::param_gradient(
        [](std::span<const Var> t) { return t[0] * t[0]; }, params);
    REQUIRE(grad.size() == 1);
    CHECK(grad[0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("tape: unused parameter has exactly zero gradient") {
    const std::vector<double> params = {2.0, 5.0};
    const auto grad = ad::param_gradient(
        [](std::span<const Var> t) { return t[0] * t[0] + Var(1.0); }, params);
    CHECK(grad[1] == 0.0);
}

TEST_CASE("tape: constant loss gives an all-zero gradient") {
    const std::vector<double> params = {1.0, 2.0, 3.0};
    const auto grad =
        ad::param_gradient([](std::span<const Var>) { return Var(42.0); }, params);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("tape: gradient is linear in the loss") {
    const std::vector<double> params = {0.7, -1.3, 0.2};
    auto l1 = [](std::span<const Var> t) { return t[0] * t[1] + sin(t[2]); };
    auto l2 = [](std::span<const Var> t) { return exp(t[0]) - t[2] * t[2] * t[1]; };
    const double a = 1.7, b = -0.6;
    const auto g1 = ad::param_gradient(l1, params);
    const auto g2 = ad::param_gradient(l2, params);
    const auto gc = ad::param_gradient(
        [&](std::span<const Var> t) { return Var(a) * l1(t) + Var(b) * l2(t); }, params);
    for (std::size_t i = 0; i < params.size(); ++i) {
        CHECK(gc[i] == doctest::Approx(a * g1[i] + b * g2[i]).epsilon(1e-14));
    }
}

TEST_CASE("tape: mlp squared-residual loss matches central differences") {
    const BoundaryLayerProblem prob = BoundaryLayerProblem::constant_case();
    const TrainedModel model = make_pointwise_model(MethodKey::pvdnet_leading, prob, 3, 4, 99);
    const CollocationSets colloc = sample_collocation(prob, 4, 100);

    auto loss_double = [&](std::span<const double> p) {
        return reference_pointwise_loss<double>(model, p, colloc).total();
    };
    const auto grad = ad::param_gradient(
        [&](std::span<const Var> vars) {
            return reference_pointwise_loss<Var>(model, vars, colloc).total();
        },
        model.params);

    std::vector<double> work = model.params;
    const double h = 1e-6;
    for (std::size_t i = 0; i < work.size(); ++i) {
        const double saved = work[i];
        work[i] = saved + h;
        const double fp = loss_double(work);
        work[i] = saved - h;
        const double fm = loss_double(work);
        work[i] = saved;
        const double fd = (fp - fm) / (2 * h);
        CHECK(std::abs(grad[i] - fd) <= 1e-6 * (1.0 + std::abs(fd)));
    }
}

TEST_CASE("tape: parameter span must match the model") {
    const BoundaryLayerProblem prob = BoundaryLayerProblem::constant_case();
    const TrainedModel model = make_pointwise_model(MethodKey::pvdnet_leading, prob, 2, 4, 1);
    const CollocationSets colloc = sample_collocation(prob, 3, 2);
    const std::vector<double> short_params(model.params.size() - 1, 0.1);
    CHECK_THROWS_AS(
        ad::param_gradient(
            [&](std::span<const Var> vars) {
                return reference_pointwise_loss<Var>(model, vars, colloc).total();
            },
            short_params),
        std::invalid_argument);
}

TEST_CASE("tape: operands from different tapes are rejected") {
    ad::GradientTape t1, t2;
    const std::vector<double> p = {1.0};
    const auto v1 = t1.parameters(p);
    const auto v2 = t2.parameters(p);
    CHECK_THROWS_AS((void)(v1[0] * v2[0]), std::invalid_argument);
}
