#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pvd::ad {

class GradientTape;

/// Scalar that may be tracked on a GradientTape.
///
/// A Var either references a tape node (tracked) or holds a plain double
/// (constant). Arithmetic on two constants folds immediately; arithmetic
/// touching a tracked operand records a node with precomputed local partials.
/// This lets numeric code templated on its scalar type run unmodified over
/// the tape: literals and default-initialized slots are just constants.
class Var {
public:
    Var() : tape_(nullptr), value_(0.0), index_(-1) {}
    Var(double value) : tape_(nullptr), value_(value), index_(-1) {}

    double value() const { return value_; }
    bool tracked() const { return tape_ != nullptr; }

private:
    friend class GradientTape;
    friend Var binary_op(const Var&, const Var&, double, double, double);
    friend Var unary_op(const Var&, double, double);

    Var(GradientTape* tape, double value, int index)
        : tape_(tape), value_(value), index_(index) {}

    GradientTape* tape_;
    double value_;
    int index_;
};

/// Wengert-list reverse accumulator for scalar losses over a flat
/// parameter vector.
class GradientTape {
public:
    GradientTape() = default;
    GradientTape(const GradientTape&) = delete;
    GradientTape& operator=(const GradientTape&) = delete;

    /// Registers the parameter leaves; gradient entries are produced in this
    /// order. May be called once per tape.
    std::vector<Var> parameters(std::span<const double> values);

    std::size_t parameter_count() const { return n_params_; }
    std::size_t node_count() const { return nodes_.size(); }

    /// Reverse sweep from `output`. Gradient of a parameter the output never
    /// touched is exactly 0. Throws if `output` lives on another tape.
    std::vector<double> gradient(const Var& output) const;

private:
    friend Var binary_op(const Var&, const Var&, double, double, double);
    friend Var unary_op(const Var&, double, double);

    struct Node {
        double value;
        double wa, wb;  // local partials
        int pa, pb;     // parent node indices, -1 if none
    };

    Var record(double value, int pa, double wa, int pb, double wb);

    std::vector<Node> nodes_;
    std::size_t n_params_ = 0;
};

Var binary_op(const Var& a, const Var& b, double value, double da, double db);
Var unary_op(const Var& a, double value, double da);

inline Var operator+(const Var& a, const Var& b) { return binary_op(a, b, a.value() + b.value(), 1.0, 1.0); }
inline Var operator-(const Var& a, const Var& b) { return binary_op(a, b, a.value() - b.value(), 1.0, -1.0); }
inline Var operator*(const Var& a, const Var& b) { return binary_op(a, b, a.value() * b.value(), b.value(), a.value()); }
inline Var operator/(const Var& a, const Var& b) {
    const double inv = 1.0 / b.value();
    return binary_op(a, b, a.value() * inv, inv, -a.value() * inv * inv);
}
inline Var operator-(const Var& a) { return unary_op(a, -a.value(), -1.0); }
inline Var operator+(const Var& a) { return a; }

inline Var& operator+=(Var& a, const Var& b) { a = a + b; return a; }
inline Var& operator-=(Var& a, const Var& b) { a = a - b; return a; }
inline Var& operator*=(Var& a, const Var& b) { a = a * b; return a; }

inline Var exp(const Var& a) {
    const double e = std::exp(a.value());
    return unary_op(a, e, e);
}
inline Var log(const Var& a) { return unary_op(a, std::log(a.value()), 1.0 / a.value()); }
inline Var sin(const Var& a) { return unary_op(a, std::sin(a.value()), std::cos(a.value())); }
inline Var cos(const Var& a) { return unary_op(a, std::cos(a.value()), -std::sin(a.value())); }
inline Var sqrt(const Var& a) {
    const double r = std::sqrt(a.value());
    return unary_op(a, r, 0.5 / r);
}

/// Loss body evaluated over tape variables; returns the scalar loss node.
using TapeLoss = std::function<Var(std::span<const Var>)>;

/// Exact gradient of `loss` at `params` by reverse accumulation.
/// Throws on a parameter-count mismatch between the tape and `params`.
std::vector<double> param_gradient(const TapeLoss& loss, std::span<const double> params);

}  // namespace pvd::ad
