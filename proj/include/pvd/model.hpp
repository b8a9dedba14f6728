#pragma once

#include <array>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pvd/bc_family.hpp"
#include "pvd/deeponet.hpp"
#include "pvd/losses_ref.hpp"
#include "pvd/mlp.hpp"
#include "pvd/problem.hpp"

namespace pvd {

enum class MethodKey {
    pvdnet_leading,
    pvdnet_high,
    blpinns,
    pvdonet_leading,
    pvdonet_high,
    pideeponet,
    datadriven,
};

const char* method_key_name(MethodKey key);
MethodKey method_key_from_string(const std::string& name);
bool is_operator_method(MethodKey key);
/// Five-network methods use narrower layers so total neurons match (40 vs 100).
int default_hidden_width(MethodKey key);

/// Which side of the Prandtl condition supplies the matching term in the
/// leading-order composite (the two agree up to training error).
enum class MatchingSide { outer, inner };

struct TrainLogRow {
    long iteration = 0;
    LossParts parts;
    double total = 0.0;
};

/// Point-wise solver bundle. Net order: outer0, inner0 [, outer1, innerC,
/// inner1]. Parameters are one flat vector, nets concatenated, holding the
/// best (lowest total training loss) checkpoint.
struct TrainedModel {
    MethodKey method = MethodKey::pvdnet_leading;
    BoundaryLayerProblem prob;
    MatchingSide prandtl_side = MatchingSide::outer;
    std::vector<Mlp> nets;
    std::vector<double> params;
    std::vector<TrainLogRow> log;
    long best_iteration = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    bool diverged = false;
    long diverged_iteration = -1;

    int net_count() const { return static_cast<int>(nets.size()); }
    std::size_t net_offset(int i) const;
    std::span<const double> net_params(int i) const;
    bool is_high_order() const { return method == MethodKey::pvdnet_high; }
};

/// Fresh model with Glorot-initialized nets (one seeded stream across nets).
TrainedModel make_pointwise_model(MethodKey method, const BoundaryLayerProblem& prob,
                                  int hidden_layers, int hidden_width, std::uint64_t seed);

/// Uniformly valid composite solution at x (Prandtl form for two-net models,
/// Van Dyke form for five-net models).
double composite_eval(const TrainedModel& model, double x);
std::vector<double> composite_eval_batch(const TrainedModel& model, std::span<const double> xs);

/// Piecewise evaluation with no composite: inner net for
/// x <= x0 + eps*xi0, outer net beyond. Requires a two-net model.
double bl_pinns_eval(const TrainedModel& model, double x);
std::vector<double> bl_pinns_eval_batch(const TrainedModel& model, std::span<const double> xs);

/// Operator bundle. Net order mirrors TrainedModel for leading/high;
/// pideeponet holds one global net; datadriven holds {outer, inner}.
struct TrainedOperator {
    MethodKey method = MethodKey::pvdonet_leading;
    BoundaryLayerProblem prob;
    BcBox box;
    MatchingSide prandtl_side = MatchingSide::outer;
    std::vector<DeepOnet> nets;
    std::vector<double> params;
    std::vector<TrainLogRow> log;
    long best_iteration = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    bool diverged = false;
    long diverged_iteration = -1;

    int net_count() const { return static_cast<int>(nets.size()); }
    std::size_t net_offset(int i) const;
    std::span<const double> net_params(int i) const;
};

TrainedOperator make_operator_model(MethodKey method, const BoundaryLayerProblem& prob,
                                    const BcBox& box, int hidden_layers, int hidden_width, int p,
                                    std::uint64_t seed);

/// Single-point operator evaluation (composite / global / piecewise by
/// method). Pure: no state is touched, repeated calls are bit-stable.
double operator_eval(const TrainedOperator& op, const std::array<double, 2>& v, double x);

/// Grid evaluator that runs every trunk once over a fixed query grid and
/// then serves any number of (a,b) pairs with branch passes only.
class OperatorGridEvaluator {
public:
    OperatorGridEvaluator(const TrainedOperator& op, std::span<const double> xs);
    std::vector<double> eval_pair(const std::array<double, 2>& v) const;

private:
    const TrainedOperator& op_;
    std::vector<double> xs_;
    // trunk_[i] is (#queries + #fixed) x p for net i, query-major.
    std::vector<std::vector<double>> trunk_;
};

// ---------------------------------------------------------------------------
// Reference (formula-route) losses of a model at arbitrary parameters.
// Instantiated over tape variables these feed param_gradient; over doubles
// they pin the batched training engine in tests.
// ---------------------------------------------------------------------------

template <class S>
LossPartsT<S> reference_pointwise_loss(const TrainedModel& model, std::span<const S> params,
                                       const CollocationSets& colloc) {
    if (params.size() != model.params.size()) {
        throw std::invalid_argument("reference_pointwise_loss: parameter count mismatch");
    }
    auto net_eval = [&](int i) {
        const auto sub = params.subspan(model.net_offset(i), model.nets[i].param_count());
        return [&model, i, sub](const JetT<S>& s) { return model.nets[i].forward1<S>(sub, s); };
    };
    if (model.is_high_order()) {
        return loss_high_ref<S>(model.prob, colloc, net_eval(0), net_eval(1), net_eval(2),
                                net_eval(3), net_eval(4));
    }
    return loss_leading_ref<S>(model.prob, colloc, net_eval(0), net_eval(1));
}

template <class S>
LossPartsT<S> reference_operator_loss(const TrainedOperator& op, std::span<const S> params,
                                      const BcFamily& family, const CollocationSets& colloc,
                                      std::span<const double> pi_global_x) {
    if (params.size() != op.params.size()) {
        throw std::invalid_argument("reference_operator_loss: parameter count mismatch");
    }
    auto net_eval = [&](int i) {
        const auto sub = params.subspan(op.net_offset(i), op.nets[i].param_count());
        return [&op, i, sub](const std::array<double, 2>& v, const JetT<S>& s) {
            return op.nets[i].forward<S>(sub, std::span<const double>(v.data(), 2), s);
        };
    };
    const auto fam = std::span<const std::array<double, 2>>(family.train);
    switch (op.method) {
        case MethodKey::pvdonet_leading:
            return loss_leading_onet_ref<S>(op.prob, colloc, fam, net_eval(0), net_eval(1));
        case MethodKey::pvdonet_high:
            return loss_high_onet_ref<S>(op.prob, colloc, fam, net_eval(0), net_eval(1),
                                         net_eval(2), net_eval(3), net_eval(4));
        case MethodKey::pideeponet:
            return pi_deeponet_loss_ref<S>(op.prob, pi_global_x, fam, net_eval(0));
        default:
            throw std::invalid_argument("reference_operator_loss: unsupported method");
    }
}

}  // namespace pvd
