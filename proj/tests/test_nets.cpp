#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "pvd/adam.hpp"
#include "pvd/deeponet.hpp"
#include "pvd/mlp.hpp"
#include "pvd/tape.hpp"

using namespace pvd;

TEST_CASE("mlp: parameter count formula") {
    for (const auto& widths : {std::vector<int>{1, 100, 100, 1}, std::vector<int>{2, 40, 40, 40, 7},
                               std::vector<int>{1, 1}, std::vector<int>{3, 5, 2}}) {
        Mlp net;
        net.widths = widths;
        std::size_t expected = 0;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            expected += static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
        }
        CHECK(net.param_count() == expected);
    }
    CHECK_THROWS_AS(Mlp::dense(0, 2, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(Mlp::dense(1, 2, 0, 1), std::invalid_argument);
}

TEST_CASE("mlp: glorot initialization is seeded and bounded") {
    const Mlp net = Mlp::dense(100, 0, 100, 100);  // a single 100 -> 100 layer
    std::vector<double> p1(net.param_count()), p2(net.param_count());
    net.init_glorot(p1, 42);
    net.init_glorot(p2, 42);
    CHECK(p1 == p2);  // bit-identical per seed

    const double bound = std::sqrt(6.0 / 200.0);
    double mean = 0.0;
    const std::size_t n_weights = 100 * 100;
    for (std::size_t i = 0; i < n_weights; ++i) {
        CHECK(std::abs(p1[i]) <= bound);
        mean += p1[i];
    }
    mean /= static_cast<double>(n_weights);
    CHECK(std::abs(mean) <= 0.01);
    for (std::size_t i = n_weights; i < p1.size(); ++i) CHECK(p1[i] == 0.0);  // biases

    std::vector<double> p3(net.param_count());
    net.init_glorot(p3, 43);
    CHECK(p1 != p3);
}

TEST_CASE("mlp: zero parameters give the zero map") {
    const Mlp net = Mlp::dense(1, 3, 8, 1);
    const std::vector<double> params(net.param_count(), 0.0);
    const Jet2 out = net.forward1<double>(params, jet_variable(0.73));
    CHECK(out.v == 0.0);
    CHECK(out.d1 == 0.0);
    CHECK(out.d2 == 0.0);
}

TEST_CASE("mlp: single affine layer propagates jets exactly") {
    const Mlp net = Mlp::dense(1, 0, 4, 1);  // widths {1, 1}
    const std::vector<double> params = {2.0, 1.0};  // w = 2, b = 1
    const Jet2 out = net.forward1<double>(params, Jet2{3.0, 1.0, 0.0});
    CHECK(out.v == 7.0);
    CHECK(out.d1 == 2.0);
    CHECK(out.d2 == 0.0);
}

TEST_CASE("mlp: constant-jet input yields exactly zero derivatives") {
    const Mlp net = Mlp::dense(1, 3, 10, 1);
    std::vector<double> params(net.param_count());
    net.init_glorot(params, 5);
    const Jet2 out = net.forward1<double>(params, jet_constant(0.4));
    CHECK(out.d1 == 0.0);
    CHECK(out.d2 == 0.0);
}

TEST_CASE("mlp: jet derivatives match finite differences") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Mlp net = Mlp::dense(1, 2 + static_cast<int>(rng.next_u64() % 3), 8, 1);
        std::vector<double> params(net.param_count());
        net.init_glorot(params, rng.next_u64());
        const double x = rng.uniform(-2.0, 2.0);
        auto f = [&](double t) { return net.forward1<double>(params, jet_constant(t)).v; };
        const Jet2 jet = net.forward1<double>(params, jet_variable(x));
        const double h1 = 1e-5, h2 = 1e-4;
        const double fd1 = (f(x + h1) - f(x - h1)) / (2 * h1);
        const double fd2 = (f(x + h2) - 2 * f(x) + f(x - h2)) / (h2 * h2);
        CHECK(std::abs(jet.d1 - fd1) <= 1e-4 * (1.0 + std::abs(fd1)));
        CHECK(std::abs(jet.d2 - fd2) <= 1e-4 * (1.0 + std::abs(fd2)));
    }
}

TEST_CASE("mlp: batched forward agrees with the reference path") {
    Rng rng(17);
    const Mlp net = Mlp::dense(1, 3, 32, 1);
    std::vector<double> params(net.param_count());
    net.init_glorot(params, 3);
    std::vector<double> xs(50);
    for (auto& x : xs) x = rng.uniform(-1.0, 3.0);
    MlpBatch batch;
    batch.configure(net, 3, static_cast<int>(xs.size()));
    load_variable_inputs(batch, xs);
    forward_batch(net, params, batch);
    for (std::size_t b = 0; b < xs.size(); ++b) {
        const Jet2 want = net.forward1<double>(params, jet_variable(xs[b]));
        const Jet2 got = batch.output_jet(static_cast<int>(b), 0, 1);
        CHECK(got.v == doctest::Approx(want.v).epsilon(1e-13));
        CHECK(got.d1 == doctest::Approx(want.d1).epsilon(1e-12));
        CHECK(got.d2 == doctest::Approx(want.d2).epsilon(1e-12));
    }
}

TEST_CASE("mlp: batched backward matches the tape on a value loss") {
    // loss = sum_b u(x_b): seed value-slot adjoints with 1.
    const Mlp net = Mlp::dense(1, 2, 6, 1);
    std::vector<double> params(net.param_count());
    net.init_glorot(params, 21);
    const std::vector<double> xs = {-0.3, 0.2, 1.1};

    MlpBatch batch;
    batch.configure(net, 3, static_cast<int>(xs.size()));
    load_variable_inputs(batch, xs);
    forward_batch(net, params, batch);
    batch.zero_output_bar();
    for (std::size_t b = 0; b < xs.size(); ++b) {
        batch.output_bar()[b * 3] = 1.0;  // d/d(value)
    }
    std::vector<double> grad(net.param_count(), 0.0);
    backward_batch(net, params, batch, grad);

    const auto tape_grad = ad::param_gradient(
        [&](std::span<const ad::Var> vars) {
            ad::Var acc(0.0);
            for (double x : xs) acc += net.forward1<ad::Var>(vars, jet_variable(ad::Var(x))).v;
            return acc;
        },
        params);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        CHECK(grad[i] == doctest::Approx(tape_grad[i]).epsilon(1e-10));
    }
}

TEST_CASE("deeponet: branch output scales and annihilates the combination") {
    DeepOnet net = DeepOnet::make(2, 2, 5, 1);  // p = 1
    std::vector<double> params(net.param_count(), 0.0);
    Rng rng(9);
    net.init_glorot(params, rng);
    // Zero the whole branch: b_1(v) = 0 for every v.
    for (std::size_t i = 0; i < net.branch.param_count(); ++i) params[i] = 0.0;
    const std::array<double, 2> v = {0.9, 1.7};
    Jet2 out = net.forward<double>(params, std::span<const double>(v.data(), 2),
                                   jet_variable(0.35));
    CHECK(out.v == 0.0);
    CHECK(out.d1 == 0.0);
    CHECK(out.d2 == 0.0);

    // Branch identically 1: output equals the trunk jet exactly.
    params[net.branch.bias_offset(net.branch.layer_count() - 1)] = 1.0;
    const Jet2 trunk = net.trunk.forward1<double>(net.trunk_params<double>(params),
                                                  jet_variable(0.35));
    out = net.forward<double>(params, std::span<const double>(v.data(), 2), jet_variable(0.35));
    CHECK(out.v == trunk.v);
    CHECK(out.d1 == trunk.d1);
    CHECK(out.d2 == trunk.d2);

    // Doubling the branch output doubles every output slot.
    params[net.branch.bias_offset(net.branch.layer_count() - 1)] = 2.0;
    const Jet2 doubled =
        net.forward<double>(params, std::span<const double>(v.data(), 2), jet_variable(0.35));
    CHECK(doubled.v == doctest::Approx(2.0 * out.v).epsilon(1e-15));
    CHECK(doubled.d1 == doctest::Approx(2.0 * out.d1).epsilon(1e-15));
    CHECK(doubled.d2 == doctest::Approx(2.0 * out.d2).epsilon(1e-15));
}

TEST_CASE("deeponet: combination is linear in the branch vector") {
    // Branch nets with zero weights and chosen output biases emit exactly
    // those vectors, so superposition tests the dot-product combination.
    DeepOnet net = DeepOnet::make(2, 1, 4, 3);
    Rng rng(31);
    std::vector<double> params(net.param_count(), 0.0);
    net.init_glorot(params, rng);
    for (std::size_t i = 0; i < net.branch.param_count(); ++i) params[i] = 0.0;
    const std::size_t bias_off = net.branch.bias_offset(net.branch.layer_count() - 1);

    const std::array<double, 2> v = {1.0, 2.0};
    const Jet2 zeta = jet_variable(0.6);
    std::vector<double> bu = {0.3, -1.2, 0.8}, bw = {1.1, 0.4, -0.5};
    auto eval_with = [&](const std::vector<double>& b) {
        for (int i = 0; i < 3; ++i) params[bias_off + i] = b[i];
        return net.forward<double>(params, std::span<const double>(v.data(), 2), zeta);
    };
    const Jet2 fu = eval_with(bu);
    const Jet2 fw = eval_with(bw);
    std::vector<double> sum = {bu[0] + bw[0], bu[1] + bw[1], bu[2] + bw[2]};
    const Jet2 fs = eval_with(sum);
    CHECK(fs.v == doctest::Approx(fu.v + fw.v).epsilon(1e-14));
    CHECK(fs.d1 == doctest::Approx(fu.d1 + fw.d1).epsilon(1e-14));
    CHECK(fs.d2 == doctest::Approx(fu.d2 + fw.d2).epsilon(1e-14));
}

TEST_CASE("deeponet: sensor length mismatch is rejected") {
    DeepOnet net = DeepOnet::make(2, 1, 4, 2);
    std::vector<double> params(net.param_count(), 0.0);
    const std::vector<double> bad = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(net.forward<double>(params, bad, jet_variable(0.1)), std::invalid_argument);
}

TEST_CASE("adam: zero gradient is a fixed point") {
    AdamState state(3);
    std::vector<double> params = {1.0, -2.0, 0.5};
    const std::vector<double> before = params;
    const std::vector<double> grads(3, 0.0);
    adam_step(state, params, grads);
    CHECK(params == before);
    CHECK(state.step == 1);
}

TEST_CASE("adam: first step moves each coordinate by about the learning rate") {
    AdamState state(2, 1e-3);
    std::vector<double> params = {0.0, 0.0};
    const std::vector<double> grads = {1.0, -4.0};
    adam_step(state, params, grads);
    // Bias-corrected first step: -lr * g / (|g| + eps).
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double want = -1e-3 * grads[i] / (std::abs(grads[i]) + 1e-8);
        CHECK(params[i] == doctest::Approx(want).epsilon(1e-12));
        CHECK(std::abs(std::abs(params[i]) - 1e-3) <= 1e-8);
    }
}

TEST_CASE("adam: deterministic given identical state") {
    std::vector<double> p1 = {0.3, 0.7}, p2 = {0.3, 0.7};
    const std::vector<double> g = {0.1, -0.2};
    AdamState s1(2), s2(2);
    adam_step(s1, p1, g);
    adam_step(s2, p2, g);
    CHECK(p1 == p2);
    CHECK(s1.m == s2.m);
    CHECK(s1.v == s2.v);
}

TEST_CASE("adam: beta1=beta2=0 reduces to normalized gradient descent") {
    AdamState state(2, 1e-2);
    state.beta1 = 0.0;
    state.beta2 = 0.0;
    std::vector<double> params = {1.0, 1.0};
    const std::vector<double> grads = {0.3, -2.5};
    adam_step(state, params, grads);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double want = 1.0 - 1e-2 * grads[i] / (std::abs(grads[i]) + 1e-8);
        CHECK(params[i] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("adam: rejects mismatched lengths and non-finite gradients") {
    AdamState state(2);
    std::vector<double> params = {1.0, 2.0};
    CHECK_THROWS_AS(adam_step(state, params, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(adam_step(state, params, std::vector<double>{1.0, std::nan("")}),
                    std::runtime_error);
}
