#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>

#include "pvd/bc_family.hpp"
#include "pvd/collocation.hpp"
#include "pvd/model.hpp"

namespace pvd {

struct TrainConfig {
    long iterations = 100000;
    long checkpoint_interval = 500;
    std::uint64_t seed = 0;  // network initialization stream
    double learning_rate = 1e-3;
    LossWeights weights;
    int hidden_layers = 5;
    int hidden_width = 0;  // 0 -> per-method default (100, or 40 for five-net methods)
    int deeponet_p = 100;
    std::ostream* progress = nullptr;
};

/// Joint Adam over all nets' parameters; loss and parts logged at iteration
/// 0, every checkpoint_interval iterations, and at the final iterate. The
/// returned model carries the lowest-total-loss checkpoint (earliest on
/// ties). A non-finite loss aborts the run at the offending iteration and
/// keeps the last good checkpoint, with the diverged flag set.
TrainedModel train_pointwise(MethodKey method, const BoundaryLayerProblem& prob,
                             const CollocationSets& colloc, const TrainConfig& cfg);

/// Loss parts of a point-wise model at its stored parameters.
LossParts pointwise_loss(const TrainedModel& model, const CollocationSets& colloc,
                         const LossWeights& weights = {});

/// The three squared Van Dyke matching terms of a five-net model.
std::array<double, 3> vandyke_matching_terms(const TrainedModel& model);

/// Operator training over the boundary-condition family. `pi_global_x` is
/// used only by the pideeponet baseline (global collocation in x).
TrainedOperator train_operator(MethodKey method, const BoundaryLayerProblem& prob,
                               const BcFamily& family, const CollocationSets& colloc,
                               std::span<const double> pi_global_x, const TrainConfig& cfg);

LossParts operator_loss(const TrainedOperator& op, const BcFamily& family,
                        const CollocationSets& colloc, std::span<const double> pi_global_x,
                        const LossWeights& weights = {});

/// Gradient of the weighted total loss at the stored parameters, computed by
/// the batched engine (the training route; checked against the tape and
/// finite differences).
std::vector<double> pointwise_loss_gradient(const TrainedModel& model,
                                            const CollocationSets& colloc,
                                            const LossWeights& weights = {});
std::vector<double> operator_loss_gradient(const TrainedOperator& op, const BcFamily& family,
                                           const CollocationSets& colloc,
                                           std::span<const double> pi_global_x,
                                           const LossWeights& weights = {});

/// Supervised two-DeepONet fit against closed-form labels (constant-
/// coefficient case only). Observation sensors are evenly spaced per
/// region (inner in xi, outer in x); labels are exact, no noise. Throws
/// if n_obs_per_region < 1 (insufficient supervision).
TrainedOperator data_driven_fit(const BoundaryLayerProblem& prob, const BcFamily& family,
                                int n_obs_per_region, const TrainConfig& cfg);

}  // namespace pvd
