#include <doctest.h>

#include <cmath>

#include "pvd/collocation.hpp"
#include "pvd/train.hpp"

using namespace pvd;

namespace {

TrainConfig tiny_config(long iterations, std::uint64_t seed = 7) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.checkpoint_interval = 10;
    cfg.seed = seed;
    cfg.hidden_layers = 2;
    cfg.hidden_width = 8;
    cfg.deeponet_p = 4;
    return cfg;
}

}  // namespace

TEST_CASE("collocation: seeded sampling within the two regions") {
    const auto prob = BoundaryLayerProblem::constant_case();
    const CollocationSets sets = sample_collocation(prob, 200, 42);
    REQUIRE(sets.outer_x.size() == 200);
    REQUIRE(sets.inner_xi.size() == 200);
    for (double x : sets.outer_x) {
        CHECK(x > prob.x0);
        CHECK(x <= 1.0);
    }
    for (double xi : sets.inner_xi) {
        CHECK(xi >= 0.0);
        CHECK(xi <= prob.xi0);
    }
    // Matching points are pinned at the layer anchor and the horizon.
    CHECK(sets.match_x0 == 0.0);
    CHECK(sets.match_xi0 == 20.0);
    const CollocationSets again = sample_collocation(prob, 200, 42);
    CHECK(again.outer_x == sets.outer_x);
    CHECK(again.inner_xi == sets.inner_xi);
    CHECK_THROWS_AS(sample_collocation(prob, 1, 0), std::invalid_argument);
}

TEST_CASE("train: zero iterations returns the initialized nets") {
    const auto prob = BoundaryLayerProblem::constant_case();
    const CollocationSets colloc = sample_collocation(prob, 8, 3);
    const TrainConfig cfg = tiny_config(0);
    const TrainedModel model = train_pointwise(MethodKey::pvdnet_leading, prob, colloc, cfg);
    const TrainedModel fresh = make_pointwise_model(MethodKey::pvdnet_leading, prob,
                                                    cfg.hidden_layers, cfg.hidden_width, cfg.seed);
    CHECK(model.params == fresh.params);
    REQUIRE(model.log.size() == 1);
    CHECK(model.log[0].iteration == 0);
    CHECK(model.best_iteration == 0);
    CHECK(model.best_loss == model.log[0].total);
    CHECK(!model.diverged);
}

TEST_CASE("train: best checkpoint never exceeds the initial loss") {
    const auto prob = BoundaryLayerProblem::constant_case();
    const CollocationSets colloc = sample_collocation(prob, 24, 5);
    const TrainedModel model =
        train_pointwise(MethodKey::pvdnet_leading, prob, colloc, tiny_config(250));
    REQUIRE(model.log.size() >= 2);
    CHECK(model.best_loss <= model.log.front().total);
    // A short run on this problem already makes progress.
    CHECK(model.best_loss < model.log.front().total);
    // Stored parameters reproduce the best checkpoint loss.
    const LossParts parts = pointwise_loss(model, colloc);
    CHECK(parts.total() == doctest::Approx(model.best_loss).epsilon(1e-12));
    // Log iterations: 0, interval, ..., final.
    CHECK(model.log.front().iteration == 0);
    CHECK(model.log.back().iteration == 250);
}

TEST_CASE("train: deterministic for a fixed seed") {
    const auto prob = BoundaryLayerProblem::variable_case();
    const CollocationSets colloc = sample_collocation(prob, 12, 9);
    const TrainedModel a = train_pointwise(MethodKey::pvdnet_high, prob, colloc, tiny_config(60));
    const TrainedModel b = train_pointwise(MethodKey::pvdnet_high, prob, colloc, tiny_config(60));
    CHECK(a.params == b.params);
    CHECK(a.best_loss == b.best_loss);
    CHECK(a.best_iteration == b.best_iteration);
}

TEST_CASE("train: divergence aborts with the last good checkpoint") {
    const auto prob = BoundaryLayerProblem::constant_case();
    const CollocationSets colloc = sample_collocation(prob, 8, 3);
    TrainConfig cfg = tiny_config(5000);
    cfg.learning_rate = 1e200;  // one step pushes activations past the double range
    const TrainedModel model = train_pointwise(MethodKey::pvdnet_leading, prob, colloc, cfg);
    CHECK(model.diverged);
    CHECK(model.diverged_iteration >= 0);
    for (double p : model.params) CHECK(std::isfinite(p));
    CHECK(std::isfinite(model.best_loss));
}

TEST_CASE("train: operator runs are deterministic and checkpointed") {
    const auto prob = BoundaryLayerProblem::constant_case();
    const CollocationSets colloc = sample_collocation(prob, 6, 2);
    const BcFamily family = sample_bc_family(BcBox{}, 5, 2, 31);
    const TrainConfig cfg = tiny_config(40, 13);
    const TrainedOperator a =
        train_operator(MethodKey::pvdonet_leading, prob, family, colloc, {}, cfg);
    const TrainedOperator b =
        train_operator(MethodKey::pvdonet_leading, prob, family, colloc, {}, cfg);
    CHECK(a.params == b.params);
    CHECK(a.log.size() == b.log.size());
    CHECK(a.best_loss <= a.log.front().total);

    const TrainedOperator zero_iter =
        train_operator(MethodKey::pvdonet_leading, prob, family, colloc, {}, tiny_config(0, 13));
    const TrainedOperator fresh = make_operator_model(MethodKey::pvdonet_leading, prob,
                                                      family.box, 2, 8, 4, 13);
    CHECK(zero_iter.params == fresh.params);
}

TEST_CASE("train: pideeponet requires global collocation") {
    const auto prob = BoundaryLayerProblem::constant_case();
    const CollocationSets colloc = sample_collocation(prob, 6, 2);
    const BcFamily family = sample_bc_family(BcBox{}, 4, 1, 3);
    CHECK_THROWS_AS(
        train_operator(MethodKey::pideeponet, prob, family, colloc, {}, tiny_config(5)),
        std::invalid_argument);
    CHECK_THROWS_AS(
        train_operator(MethodKey::datadriven, prob, family, colloc, {}, tiny_config(5)),
        std::invalid_argument);
}

TEST_CASE("train: vandyke matching terms are exposed for five-net models") {
    const auto prob = BoundaryLayerProblem::constant_case();
    const TrainedModel high = make_pointwise_model(MethodKey::pvdnet_high, prob, 2, 4, 3);
    const auto terms = vandyke_matching_terms(high);
    for (double t : terms) CHECK(t >= 0.0);
    const TrainedModel leading = make_pointwise_model(MethodKey::pvdnet_leading, prob, 2, 4, 3);
    CHECK_THROWS_AS(vandyke_matching_terms(leading), std::invalid_argument);
}
