#pragma once

#include <cmath>
#include <type_traits>

namespace pvd {

/// Second-order Taylor jet of a scalar quantity with respect to one scalar
/// input: value, first and second derivative.
///
/// The slot type S is double in the fast paths and an autodiff tape variable
/// when parameter gradients of a jet-built expression are required
/// (reverse-over-forward). Lifting rules:
///   variable s  -> (s, 1, 0)
///   constant c  -> (c, 0, 0)
/// All arithmetic follows the sum, Leibniz and second-order chain rules, e.g.
///   (fg)''  = f''g + 2f'g' + fg''
///   f(g)''  = f''(g) g'^2 + f'(g) g''
template <class S>
struct JetT {
    S v{};
    S d1{};
    S d2{};
};

using Jet2 = JetT<double>;

template <class S>
JetT<S> jet_variable(const S& s) {
    return {s, S(1), S(0)};
}

template <class S>
JetT<S> jet_constant(const S& s) {
    return {s, S(0), S(0)};
}

template <class S>
JetT<S> operator+(const JetT<S>& a, const JetT<S>& b) {
    return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}

template <class S>
JetT<S> operator-(const JetT<S>& a, const JetT<S>& b) {
    return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}

template <class S>
JetT<S> operator-(const JetT<S>& a) {
    return {-a.v, -a.d1, -a.d2};
}

template <class S>
JetT<S> operator*(const JetT<S>& a, const JetT<S>& b) {
    return {a.v * b.v,
            a.v * b.d1 + a.d1 * b.v,
            a.v * b.d2 + S(2) * (a.d1 * b.d1) + a.d2 * b.v};
}

/// Scale by a value that is constant with respect to the jet input.
template <class S>
JetT<S> jet_scale(const JetT<S>& a, const S& c) {
    return {a.v * c, a.d1 * c, a.d2 * c};
}

template <class S>
    requires(!std::is_same_v<S, double>)
JetT<S> jet_scale(const JetT<S>& a, double c) {
    return {a.v * S(c), a.d1 * S(c), a.d2 * S(c)};
}

/// c1 * a + c0 with input-constant coefficients.
template <class S>
JetT<S> jet_affine(const JetT<S>& a, double c1, double c0) {
    return {S(c1) * a.v + S(c0), S(c1) * a.d1, S(c1) * a.d2};
}

template <class S>
JetT<S> jet_shift(const JetT<S>& a, const S& c0) {
    return {a.v + c0, a.d1, a.d2};
}

// Logistic function evaluated without overflow on either tail.
inline double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// silu(z) = z * sigmoid(z), propagated through second order.
///
/// With s = sigmoid(z.v):
///   f   = z s
///   f'  = s (1 + z (1 - s))
///   f'' = s'(2 + z (1 - 2s)),  s' = s (1 - s)
inline Jet2 silu(const Jet2& z) {
    const double s = stable_sigmoid(z.v);
    const double sp = s * (1.0 - s);
    const double f = z.v * s;
    const double f1 = s + z.v * sp;
    const double f2 = 2.0 * sp + z.v * sp * (1.0 - 2.0 * s);
    return {f, f1 * z.d1, f2 * z.d1 * z.d1 + f1 * z.d2};
}

/// Generic-slot silu; requires exp(S) (provided by the tape for S = Var).
template <class S>
JetT<S> silu(const JetT<S>& z) {
    using std::exp;
    const S s = S(1) / (S(1) + exp(-z.v));
    const S sp = s * (S(1) - s);
    const S f1 = s + z.v * sp;
    const S f2 = S(2) * sp + z.v * (sp * (S(1) - S(2) * s));
    return {z.v * s, f1 * z.d1, f2 * (z.d1 * z.d1) + f1 * z.d2};
}

template <class S>
JetT<S> exp(const JetT<S>& a) {
    using std::exp;
    const S e = exp(a.v);
    return {e, e * a.d1, e * (a.d1 * a.d1) + e * a.d2};
}

template <class S>
JetT<S> sin(const JetT<S>& a) {
    using std::cos;
    using std::sin;
    const S s = sin(a.v);
    const S c = cos(a.v);
    return {s, c * a.d1, -s * (a.d1 * a.d1) + c * a.d2};
}

template <class S>
JetT<S> cos(const JetT<S>& a) {
    using std::cos;
    using std::sin;
    const S c = cos(a.v);
    const S s = sin(a.v);
    return {c, -s * a.d1, -c * (a.d1 * a.d1) - s * a.d2};
}

inline bool jet_finite(const Jet2& a) {
    return std::isfinite(a.v) && std::isfinite(a.d1) && std::isfinite(a.d2);
}

}  // namespace pvd
