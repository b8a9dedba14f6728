#pragma once

#include <string>
#include <vector>

#include "pvd/model.hpp"

namespace pvd {

/// On-disk weight format "PVDW1": magic, method key, per-Mlp layer shapes,
/// then all parameters as 64-bit little-endian doubles in layer order
/// (weights row-major, then biases). DeepOnet nets contribute two Mlp
/// entries each (branch, then trunk). Round trips are bit-identical.
struct WeightBundle {
    std::string method_key;
    std::vector<std::vector<int>> shapes;
    std::vector<double> params;
};

void save_weights(const WeightBundle& bundle, const std::string& path);
/// Throws on a wrong magic tag (version error), a truncated file, or a
/// shape/byte-length mismatch.
WeightBundle load_weights(const std::string& path);

WeightBundle bundle_from_model(const TrainedModel& model);
WeightBundle bundle_from_operator(const TrainedOperator& op);

/// Rebuilds an evaluable model around bundle weights. The bundle must carry
/// a matching method key; shapes drive the architecture.
TrainedModel model_from_bundle(const WeightBundle& bundle, const BoundaryLayerProblem& prob,
                               MatchingSide side = MatchingSide::outer);
TrainedOperator operator_from_bundle(const WeightBundle& bundle, const BoundaryLayerProblem& prob,
                                     const BcBox& box, MatchingSide side = MatchingSide::outer);

}  // namespace pvd
