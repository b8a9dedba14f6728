#include "pvd/tape.hpp"

#include <stdexcept>

namespace pvd::ad {

std::vector<Var> GradientTape::parameters(std::span<const double> values) {
    if (!nodes_.empty()) {
        throw std::logic_error("GradientTape: parameters must be registered on a fresh tape");
    }
    n_params_ = values.size();
    nodes_.reserve(values.size());
    std::vector<Var> vars;
    vars.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        nodes_.push_back({values[i], 0.0, 0.0, -1, -1});
        vars.push_back(Var(this, values[i], static_cast<int>(i)));
    }
    return vars;
}

Var GradientTape::record(double value, int pa, double wa, int pb, double wb) {
    nodes_.push_back({value, wa, wb, pa, pb});
    return Var(this, value, static_cast<int>(nodes_.size()) - 1);
}

std::vector<double> GradientTape::gradient(const Var& output) const {
    std::vector<double> grad(n_params_, 0.0);
    if (!output.tracked()) {
        return grad;  // loss is constant in every parameter
    }
    if (output.tape_ != this) {
        throw std::invalid_argument("GradientTape: output recorded on a different tape");
    }
    std::vector<double> adjoint(nodes_.size(), 0.0);
    adjoint[static_cast<std::size_t>(output.index_)] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        const double a = adjoint[i];
        if (a == 0.0) continue;
        const Node& node = nodes_[i];
        if (node.pa >= 0) adjoint[static_cast<std::size_t>(node.pa)] += node.wa * a;
        if (node.pb >= 0) adjoint[static_cast<std::size_t>(node.pb)] += node.wb * a;
    }
    for (std::size_t i = 0; i < n_params_; ++i) grad[i] = adjoint[i];
    return grad;
}

Var binary_op(const Var& a, const Var& b, double value, double da, double db) {
    GradientTape* tape = a.tape_ ? a.tape_ : b.tape_;
    if (!tape) return Var(value);
    if (a.tape_ && b.tape_ && a.tape_ != b.tape_) {
        throw std::invalid_argument("Var: operands recorded on different tapes");
    }
    return tape->record(value, a.tape_ ? a.index_ : -1, da, b.tape_ ? b.index_ : -1, db);
}

Var unary_op(const Var& a, double value, double da) {
    if (!a.tape_) return Var(value);
    return a.tape_->record(value, a.index_, da, -1, 0.0);
}

std::vector<double> param_gradient(const TapeLoss& loss, std::span<const double> params) {
    GradientTape tape;
    const std::vector<Var> vars = tape.parameters(params);
    const Var out = loss(vars);
    return tape.gradient(out);
}

}  // namespace pvd::ad
