#include "pvd/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace pvd {

const char* method_key_name(MethodKey key) {
    switch (key) {
        case MethodKey::pvdnet_leading: return "pvdnet-leading";
        case MethodKey::pvdnet_high: return "pvdnet-high";
        case MethodKey::blpinns: return "blpinns";
        case MethodKey::pvdonet_leading: return "pvdonet-leading";
        case MethodKey::pvdonet_high: return "pvdonet-high";
        case MethodKey::pideeponet: return "pideeponet";
        case MethodKey::datadriven: return "datadriven";
    }
    return "unknown";
}

MethodKey method_key_from_string(const std::string& name) {
    if (name == "pvdnet-leading") return MethodKey::pvdnet_leading;
    if (name == "pvdnet-high") return MethodKey::pvdnet_high;
    if (name == "blpinns") return MethodKey::blpinns;
    if (name == "pvdonet-leading") return MethodKey::pvdonet_leading;
    if (name == "pvdonet-high") return MethodKey::pvdonet_high;
    if (name == "pideeponet") return MethodKey::pideeponet;
    if (name == "datadriven") return MethodKey::datadriven;
    throw std::invalid_argument("unknown method key: " + name);
}

bool is_operator_method(MethodKey key) {
    return key == MethodKey::pvdonet_leading || key == MethodKey::pvdonet_high ||
           key == MethodKey::pideeponet || key == MethodKey::datadriven;
}

int default_hidden_width(MethodKey key) {
    return (key == MethodKey::pvdnet_high || key == MethodKey::pvdonet_high) ? 40 : 100;
}

std::size_t TrainedModel::net_offset(int i) const {
    std::size_t off = 0;
    for (int k = 0; k < i; ++k) off += nets[k].param_count();
    return off;
}

std::span<const double> TrainedModel::net_params(int i) const {
    return std::span<const double>(params).subspan(net_offset(i), nets[i].param_count());
}

TrainedModel make_pointwise_model(MethodKey method, const BoundaryLayerProblem& prob,
                                  int hidden_layers, int hidden_width, std::uint64_t seed) {
    if (is_operator_method(method)) {
        throw std::invalid_argument("make_pointwise_model: operator method key");
    }
    TrainedModel model;
    model.method = method;
    model.prob = prob;
    const int n_nets = (method == MethodKey::pvdnet_high) ? 5 : 2;
    for (int i = 0; i < n_nets; ++i) {
        model.nets.push_back(Mlp::dense(1, hidden_layers, hidden_width, 1));
    }
    std::size_t total = 0;
    for (const auto& net : model.nets) total += net.param_count();
    model.params.assign(total, 0.0);
    Rng rng(seed);
    std::size_t off = 0;
    for (const auto& net : model.nets) {
        net.init_glorot(std::span<double>(model.params).subspan(off, net.param_count()), rng);
        off += net.param_count();
    }
    return model;
}

namespace {

double net_value(const TrainedModel& model, int i, double s) {
    return model.nets[i].forward1<double>(model.net_params(i), jet_constant(s)).v;
}

}  // namespace

double composite_eval(const TrainedModel& model, double x) {
    const auto& prob = model.prob;
    const double xi = stretch(prob, x);
    // Inner nets are only trained up to the truncation horizon xi0 (the
    // finite stand-in for +inf); beyond it they are held at their horizon
    // value while the secular eps*xi factor stays exact, which makes the
    // inner expansion cancel the Van Dyke matching term identically there.
    const double xi_q = std::min(xi, prob.xi0);
    if (model.is_high_order()) {
        const double o = net_value(model, 0, x) + prob.epsilon * net_value(model, 2, x);
        const double uc = net_value(model, 3, xi_q);
        const double in =
            net_value(model, 1, xi_q) + prob.epsilon * (xi * uc + net_value(model, 4, xi_q));
        const double match = net_value(model, 1, prob.xi0) +
                             net_value(model, 3, prob.xi0) * (x - prob.x0) +
                             prob.epsilon * net_value(model, 4, prob.xi0);
        return o + in - match;
    }
    const double match = (model.prandtl_side == MatchingSide::outer)
                             ? net_value(model, 0, prob.x0)
                             : net_value(model, 1, prob.xi0);
    // inner + (outer - match): keeps composite(x0) == inner(0) exact.
    return net_value(model, 1, xi_q) + (net_value(model, 0, x) - match);
}

double bl_pinns_eval(const TrainedModel& model, double x) {
    if (model.is_high_order()) {
        throw std::invalid_argument("bl_pinns_eval: needs a two-net (leading) model");
    }
    const auto& prob = model.prob;
    if (x <= prob.x0 + prob.epsilon * prob.xi0) {
        return net_value(model, 1, stretch(prob, x));
    }
    return net_value(model, 0, x);
}

namespace {

// One K=1 forward per net over its query list; fixed points appended so a
// batch evaluation and the scalar path see bit-identical subexpressions.
std::vector<double> net_values_batch(const TrainedModel& model, int i,
                                     std::span<const double> queries) {
    MlpBatch batch;
    batch.configure(model.nets[i], 1, static_cast<int>(queries.size()));
    load_variable_inputs(batch, queries);
    forward_batch(model.nets[i], model.net_params(i), batch);
    std::vector<double> out(queries.size());
    for (std::size_t b = 0; b < queries.size(); ++b) out[b] = batch.output_jet(static_cast<int>(b), 0, 1).v;
    return out;
}

}  // namespace

std::vector<double> composite_eval_batch(const TrainedModel& model, std::span<const double> xs) {
    const auto& prob = model.prob;
    const std::size_t n = xs.size();
    std::vector<double> out_q(xs.begin(), xs.end());
    out_q.push_back(prob.x0);
    std::vector<double> in_q(n);  // net queries, clamped at the horizon
    for (std::size_t i = 0; i < n; ++i) in_q[i] = std::min(stretch(prob, xs[i]), prob.xi0);
    in_q.push_back(prob.xi0);

    std::vector<double> result(n);
    if (model.is_high_order()) {
        const auto o0 = net_values_batch(model, 0, out_q);
        const auto o1 = net_values_batch(model, 2, out_q);
        const auto i0 = net_values_batch(model, 1, in_q);
        const auto ic = net_values_batch(model, 3, in_q);
        const auto i1 = net_values_batch(model, 4, in_q);
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = stretch(prob, xs[i]);  // exact secular factor
            const double o = o0[i] + prob.epsilon * o1[i];
            const double in = i0[i] + prob.epsilon * (xi * ic[i] + i1[i]);
            const double match =
                i0[n] + ic[n] * (xs[i] - prob.x0) + prob.epsilon * i1[n];
            result[i] = o + in - match;
        }
        return result;
    }
    const auto o0 = net_values_batch(model, 0, out_q);
    const auto i0 = net_values_batch(model, 1, in_q);
    const double match = (model.prandtl_side == MatchingSide::outer) ? o0[n] : i0[n];
    for (std::size_t i = 0; i < n; ++i) result[i] = i0[i] + (o0[i] - match);
    return result;
}

std::vector<double> bl_pinns_eval_batch(const TrainedModel& model, std::span<const double> xs) {
    if (model.is_high_order()) {
        throw std::invalid_argument("bl_pinns_eval_batch: needs a two-net (leading) model");
    }
    const auto& prob = model.prob;
    std::vector<double> in_q(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) in_q[i] = stretch(prob, xs[i]);
    const auto o0 = net_values_batch(model, 0, xs);
    const auto i0 = net_values_batch(model, 1, in_q);
    std::vector<double> result(xs.size());
    const double split = prob.x0 + prob.epsilon * prob.xi0;
    for (std::size_t i = 0; i < xs.size(); ++i) result[i] = (xs[i] <= split) ? i0[i] : o0[i];
    return result;
}

std::size_t TrainedOperator::net_offset(int i) const {
    std::size_t off = 0;
    for (int k = 0; k < i; ++k) off += nets[k].param_count();
    return off;
}

std::span<const double> TrainedOperator::net_params(int i) const {
    return std::span<const double>(params).subspan(net_offset(i), nets[i].param_count());
}

TrainedOperator make_operator_model(MethodKey method, const BoundaryLayerProblem& prob,
                                    const BcBox& box, int hidden_layers, int hidden_width, int p,
                                    std::uint64_t seed) {
    if (!is_operator_method(method)) {
        throw std::invalid_argument("make_operator_model: point-wise method key");
    }
    TrainedOperator op;
    op.method = method;
    op.prob = prob;
    op.box = box;
    int n_nets = 2;
    if (method == MethodKey::pvdonet_high) n_nets = 5;
    if (method == MethodKey::pideeponet) n_nets = 1;
    for (int i = 0; i < n_nets; ++i) {
        op.nets.push_back(DeepOnet::make(2, hidden_layers, hidden_width, p));
    }
    std::size_t total = 0;
    for (const auto& net : op.nets) total += net.param_count();
    op.params.assign(total, 0.0);
    Rng rng(seed);
    std::size_t off = 0;
    for (const auto& net : op.nets) {
        net.init_glorot(std::span<double>(op.params).subspan(off, net.param_count()), rng);
        off += net.param_count();
    }
    return op;
}

namespace {

double onet_value(const TrainedOperator& op, int i, const std::array<double, 2>& v, double s) {
    return op.nets[i]
        .forward<double>(op.net_params(i), std::span<const double>(v.data(), 2), jet_constant(s))
        .v;
}

}  // namespace

double operator_eval(const TrainedOperator& op, const std::array<double, 2>& v, double x) {
    const auto& prob = op.prob;
    const double xi = stretch(prob, x);
    const double xi_q = std::min(xi, prob.xi0);  // trunk queries stop at the horizon
    switch (op.method) {
        case MethodKey::pideeponet:
            return onet_value(op, 0, v, x);
        case MethodKey::datadriven:
            return (x <= prob.junction()) ? onet_value(op, 1, v, xi) : onet_value(op, 0, v, x);
        case MethodKey::pvdonet_high: {
            const double o = onet_value(op, 0, v, x) + prob.epsilon * onet_value(op, 2, v, x);
            const double in =
                onet_value(op, 1, v, xi_q) +
                prob.epsilon * (xi * onet_value(op, 3, v, xi_q) + onet_value(op, 4, v, xi_q));
            const double match = onet_value(op, 1, v, prob.xi0) +
                                 onet_value(op, 3, v, prob.xi0) * (x - prob.x0) +
                                 prob.epsilon * onet_value(op, 4, v, prob.xi0);
            return o + in - match;
        }
        default: {
            const double match = (op.prandtl_side == MatchingSide::outer)
                                     ? onet_value(op, 0, v, prob.x0)
                                     : onet_value(op, 1, v, prob.xi0);
            return onet_value(op, 1, v, xi_q) + (onet_value(op, 0, v, x) - match);
        }
    }
}

OperatorGridEvaluator::OperatorGridEvaluator(const TrainedOperator& op, std::span<const double> xs)
    : op_(op), xs_(xs.begin(), xs.end()) {
    const auto& prob = op.prob;
    trunk_.resize(op.nets.size());
    for (int i = 0; i < op.net_count(); ++i) {
        // Outer nets (and the global pideeponet net) take x; inner nets take xi.
        const bool inner = (op.method == MethodKey::pvdonet_leading && i == 1) ||
                           (op.method == MethodKey::pvdonet_high && (i == 1 || i == 3 || i == 4)) ||
                           (op.method == MethodKey::datadriven && i == 1);
        // Inner trunks are queried at min(xi, xi0): held at the horizon
        // value beyond the truncation, like the point-wise composites.
        std::vector<double> queries;
        queries.reserve(xs_.size() + 1);
        for (double x : xs_) {
            const double q = inner ? stretch(prob, x) : x;
            queries.push_back((inner && op.method != MethodKey::datadriven)
                                  ? std::min(q, prob.xi0)
                                  : q);
        }
        queries.push_back(inner ? prob.xi0 : prob.x0);  // fixed matching query
        const Mlp& trunk = op.nets[i].trunk;
        MlpBatch batch;
        batch.configure(trunk, 1, static_cast<int>(queries.size()));
        load_variable_inputs(batch, queries);
        forward_batch(trunk, op.nets[i].trunk_params(op.net_params(i)), batch);
        const int p = op.nets[i].p;
        trunk_[i].resize(queries.size() * static_cast<std::size_t>(p));
        for (std::size_t q = 0; q < queries.size(); ++q) {
            for (int j = 0; j < p; ++j) {
                trunk_[i][q * p + j] = batch.output_jet(static_cast<int>(q), j, p).v;
            }
        }
    }
}

std::vector<double> OperatorGridEvaluator::eval_pair(const std::array<double, 2>& v) const {
    const auto& prob = op_.prob;
    const std::size_t n = xs_.size();
    const int n_nets = op_.net_count();
    // Branch outputs per net.
    std::vector<std::vector<double>> bout(n_nets);
    for (int i = 0; i < n_nets; ++i) {
        const DeepOnet& net = op_.nets[i];
        std::vector<JetT<double>> sensors = {jet_constant(v[0]), jet_constant(v[1])};
        std::vector<JetT<double>> b(net.p);
        net.branch.forward<double>(net.branch_params(op_.net_params(i)), sensors, b);
        bout[i].resize(net.p);
        for (int j = 0; j < net.p; ++j) bout[i][j] = b[j].v;
    }
    auto combine = [&](int i, std::size_t q) {
        const int p = op_.nets[i].p;
        const double* t = trunk_[i].data() + q * p;
        double acc = 0.0;
        for (int j = 0; j < p; ++j) acc += bout[i][j] * t[j];
        return acc;
    };
    std::vector<double> out(n);
    switch (op_.method) {
        case MethodKey::pideeponet:
            for (std::size_t q = 0; q < n; ++q) out[q] = combine(0, q);
            break;
        case MethodKey::datadriven: {
            const double split = prob.junction();
            for (std::size_t q = 0; q < n; ++q) {
                out[q] = (xs_[q] <= split) ? combine(1, q) : combine(0, q);
            }
            break;
        }
        case MethodKey::pvdonet_high: {
            const double i0_m = combine(1, n);
            const double ic_m = combine(3, n);
            const double i1_m = combine(4, n);
            for (std::size_t q = 0; q < n; ++q) {
                const double xi = stretch(prob, xs_[q]);
                const double o = combine(0, q) + prob.epsilon * combine(2, q);
                const double in = combine(1, q) + prob.epsilon * (xi * combine(3, q) + combine(4, q));
                const double match = i0_m + ic_m * (xs_[q] - prob.x0) + prob.epsilon * i1_m;
                out[q] = o + in - match;
            }
            break;
        }
        default: {
            const double match = (op_.prandtl_side == MatchingSide::outer) ? combine(0, n)
                                                                           : combine(1, n);
            for (std::size_t q = 0; q < n; ++q) out[q] = combine(1, q) + (combine(0, q) - match);
            break;
        }
    }
    return out;
}

}  // namespace pvd
