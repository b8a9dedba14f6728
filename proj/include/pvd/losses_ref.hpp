#pragma once

#include <array>
#include <span>

#include "pvd/collocation.hpp"
#include "pvd/problem.hpp"

namespace pvd {

/// The four loss terms; total is their plain (unit-weight) sum.
template <class S>
struct LossPartsT {
    S outer_pde{};
    S inner_pde{};
    S matching{};
    S boundary{};

    S total() const { return ((outer_pde + inner_pde) + matching) + boundary; }
};

using LossParts = LossPartsT<double>;

/// Term weights (all 1 unless overridden in the experiment config).
struct LossWeights {
    double outer_pde = 1.0;
    double inner_pde = 1.0;
    double matching = 1.0;
    double boundary = 1.0;
};

inline double weighted_total(const LossParts& parts, const LossWeights& w) {
    return ((w.outer_pde * parts.outer_pde + w.inner_pde * parts.inner_pde) +
            w.matching * parts.matching) +
           w.boundary * parts.boundary;
}

// These are the formula-level definitions of every training objective. The
// batched engine in train.cpp computes the same quantities (with gradients)
// on flat buffers; tests pin the two routes against each other. Evaluators
// are callables:
//   point-wise nets:  JetT<S> f(const JetT<S>& s)
//   operator nets:    JetT<S> g(std::span<const double> v, const JetT<S>& s)

/// Leading-order point-wise loss:
///   L_o = mean |a u_o' + b u_o|^2           over T_o
///   L_i = mean |psi'' + a(x0) psi'|^2       over T_i
///   L_m = |u_o(x0) - u_i(xi0)|^2
///   L_b = |u_i(0) - alpha|^2 + |u_o(1) - beta|^2
template <class S, class UOuter, class UInner>
LossPartsT<S> loss_leading_ref(const BoundaryLayerProblem& prob, const CollocationSets& colloc,
                               UOuter&& u_outer, UInner&& u_inner) {
    LossPartsT<S> parts;
    for (double x : colloc.outer_x) {
        const S r = outer_residual0(prob, x, u_outer(jet_variable(S(x))));
        parts.outer_pde += r * r;
    }
    parts.outer_pde = parts.outer_pde * S(1.0 / static_cast<double>(colloc.outer_x.size()));
    for (double xi : colloc.inner_xi) {
        const S r = inner_residual_leading(prob, u_inner(jet_variable(S(xi))));
        parts.inner_pde += r * r;
    }
    parts.inner_pde = parts.inner_pde * S(1.0 / static_cast<double>(colloc.inner_xi.size()));
    {
        const S m = u_outer(jet_variable(S(colloc.match_x0))).v -
                    u_inner(jet_variable(S(colloc.match_xi0))).v;
        parts.matching = m * m;
    }
    {
        const S bi = u_inner(jet_variable(S(colloc.bc_inner_xi))).v - S(prob.alpha);
        const S bo = u_outer(jet_variable(S(colloc.bc_outer_x))).v - S(prob.beta);
        parts.boundary = bi * bi + bo * bo;
    }
    return parts;
}

/// High-order point-wise loss (five nets). The outer part stacks both
/// hierarchy orders; the inner part penalizes the full residual of the
/// assembled two-term surrogate; matching enforces the three Van Dyke
/// conditions; boundary conditions are imposed per order.
template <class S, class UO0, class UI0, class UO1, class UIC, class UI1>
LossPartsT<S> loss_high_ref(const BoundaryLayerProblem& prob, const CollocationSets& colloc,
                            UO0&& uo0, UI0&& ui0, UO1&& uo1, UIC&& uic, UI1&& ui1) {
    LossPartsT<S> parts;
    for (double x : colloc.outer_x) {
        const JetT<S> j0 = uo0(jet_variable(S(x)));
        const JetT<S> j1 = uo1(jet_variable(S(x)));
        const S r0 = outer_residual0(prob, x, j0);
        const S r1 = outer_residual1(prob, x, j0, j1);
        parts.outer_pde += r0 * r0 + r1 * r1;
    }
    parts.outer_pde = parts.outer_pde * S(1.0 / static_cast<double>(colloc.outer_x.size()));
    for (double xi : colloc.inner_xi) {
        const JetT<S> assembled = assemble_inner(prob, xi, ui0(jet_variable(S(xi))),
                                                 uic(jet_variable(S(xi))), ui1(jet_variable(S(xi))));
        const S r = inner_residual_full(prob, xi, assembled);
        parts.inner_pde += r * r;
    }
    parts.inner_pde = parts.inner_pde * S(1.0 / static_cast<double>(colloc.inner_xi.size()));
    {
        const JetT<S> o0 = uo0(jet_variable(S(colloc.match_x0)));
        const S m0 = o0.v - ui0(jet_variable(S(colloc.match_xi0))).v;
        const S m1 = uo1(jet_variable(S(colloc.match_x0))).v -
                     ui1(jet_variable(S(colloc.match_xi0))).v;
        const S mc = o0.d1 - uic(jet_variable(S(colloc.match_xi0))).v;
        parts.matching = m0 * m0 + m1 * m1 + mc * mc;
    }
    {
        const S b1 = uo1(jet_variable(S(colloc.bc_outer_x))).v;
        const S b2 = uo0(jet_variable(S(colloc.bc_outer_x))).v - S(prob.beta);
        const S b3 = ui1(jet_variable(S(colloc.bc_inner_xi))).v;
        const S b4 = ui0(jet_variable(S(colloc.bc_inner_xi))).v - S(prob.alpha);
        parts.boundary = b1 * b1 + b2 * b2 + b3 * b3 + b4 * b4;
    }
    return parts;
}

/// Leading-order operator loss: the point-wise parts averaged over the
/// training functions, with per-function boundary values
/// G_i(v)(0) = a_n and G_o(v)(1) = b_n.
template <class S, class GOuter, class GInner>
LossPartsT<S> loss_leading_onet_ref(const BoundaryLayerProblem& prob,
                                    const CollocationSets& colloc,
                                    std::span<const std::array<double, 2>> family, GOuter&& g_outer,
                                    GInner&& g_inner) {
    LossPartsT<S> parts;
    const double inv_n = 1.0 / static_cast<double>(family.size());
    for (const auto& v : family) {
        for (double x : colloc.outer_x) {
            const S r = outer_residual0(prob, x, g_outer(v, jet_variable(S(x))));
            parts.outer_pde += r * r;
        }
        for (double xi : colloc.inner_xi) {
            const S r = inner_residual_leading(prob, g_inner(v, jet_variable(S(xi))));
            parts.inner_pde += r * r;
        }
        const S m = g_outer(v, jet_variable(S(colloc.match_x0))).v -
                    g_inner(v, jet_variable(S(colloc.match_xi0))).v;
        parts.matching += m * m;
        const S bi = g_inner(v, jet_variable(S(colloc.bc_inner_xi))).v - S(v[0]);
        const S bo = g_outer(v, jet_variable(S(colloc.bc_outer_x))).v - S(v[1]);
        parts.boundary += bi * bi + bo * bo;
    }
    parts.outer_pde = parts.outer_pde * S(inv_n / static_cast<double>(colloc.outer_x.size()));
    parts.inner_pde = parts.inner_pde * S(inv_n / static_cast<double>(colloc.inner_xi.size()));
    parts.matching = parts.matching * S(inv_n);
    parts.boundary = parts.boundary * S(inv_n);
    return parts;
}

/// High-order operator loss: the five-net objective averaged over the family.
template <class S, class GO0, class GI0, class GO1, class GIC, class GI1>
LossPartsT<S> loss_high_onet_ref(const BoundaryLayerProblem& prob, const CollocationSets& colloc,
                                 std::span<const std::array<double, 2>> family, GO0&& go0,
                                 GI0&& gi0, GO1&& go1, GIC&& gic, GI1&& gi1) {
    LossPartsT<S> parts;
    const double inv_n = 1.0 / static_cast<double>(family.size());
    for (const auto& v : family) {
        for (double x : colloc.outer_x) {
            const JetT<S> j0 = go0(v, jet_variable(S(x)));
            const JetT<S> j1 = go1(v, jet_variable(S(x)));
            const S r0 = outer_residual0(prob, x, j0);
            const S r1 = outer_residual1(prob, x, j0, j1);
            parts.outer_pde += r0 * r0 + r1 * r1;
        }
        for (double xi : colloc.inner_xi) {
            const JetT<S> assembled =
                assemble_inner(prob, xi, gi0(v, jet_variable(S(xi))), gic(v, jet_variable(S(xi))),
                               gi1(v, jet_variable(S(xi))));
            const S r = inner_residual_full(prob, xi, assembled);
            parts.inner_pde += r * r;
        }
        const JetT<S> o0 = go0(v, jet_variable(S(colloc.match_x0)));
        const S m0 = o0.v - gi0(v, jet_variable(S(colloc.match_xi0))).v;
        const S m1 = go1(v, jet_variable(S(colloc.match_x0))).v -
                     gi1(v, jet_variable(S(colloc.match_xi0))).v;
        const S mc = o0.d1 - gic(v, jet_variable(S(colloc.match_xi0))).v;
        parts.matching += m0 * m0 + m1 * m1 + mc * mc;
        const S b1 = go1(v, jet_variable(S(colloc.bc_outer_x))).v;
        const S b2 = go0(v, jet_variable(S(colloc.bc_outer_x))).v - S(v[1]);
        const S b3 = gi1(v, jet_variable(S(colloc.bc_inner_xi))).v;
        const S b4 = gi0(v, jet_variable(S(colloc.bc_inner_xi))).v - S(v[0]);
        parts.boundary += b1 * b1 + b2 * b2 + b3 * b3 + b4 * b4;
    }
    parts.outer_pde = parts.outer_pde * S(inv_n / static_cast<double>(colloc.outer_x.size()));
    parts.inner_pde = parts.inner_pde * S(inv_n / static_cast<double>(colloc.inner_xi.size()));
    parts.matching = parts.matching * S(inv_n);
    parts.boundary = parts.boundary * S(inv_n);
    return parts;
}

/// PI-DeepONet baseline: one global operator, full-equation residual
/// eps u'' + a u' + b u over collocation in x on [0,1], plus the two
/// boundary penalties per training function. The residual and boundary
/// pieces map onto (outer_pde, boundary); inner/matching stay zero.
template <class S, class G>
LossPartsT<S> pi_deeponet_loss_ref(const BoundaryLayerProblem& prob,
                                   std::span<const double> global_x,
                                   std::span<const std::array<double, 2>> family, G&& g) {
    LossPartsT<S> parts;
    const double inv_n = 1.0 / static_cast<double>(family.size());
    for (const auto& v : family) {
        for (double x : global_x) {
            const JetT<S> u = g(v, jet_variable(S(x)));
            const S r = S(prob.epsilon) * u.d2 + S(prob.a(x)) * u.d1 + S(prob.b(x)) * u.v;
            parts.outer_pde += r * r;
        }
        const S b0 = g(v, jet_variable(S(0.0))).v - S(v[0]);
        const S b1 = g(v, jet_variable(S(1.0))).v - S(v[1]);
        parts.boundary += b0 * b0 + b1 * b1;
    }
    parts.outer_pde = parts.outer_pde * S(inv_n / static_cast<double>(global_x.size()));
    parts.boundary = parts.boundary * S(inv_n);
    return parts;
}

/// Supervised data-driven objective: mean-squared error against labeled
/// observations, inner region in xi and outer region in x. Residual slots
/// carry the two regional MSE terms; matching/boundary stay zero.
template <class S, class GOuter, class GInner>
LossPartsT<S> data_driven_loss_ref(std::span<const std::array<double, 2>> family,
                                   std::span<const double> obs_xi,
                                   std::span<const double> obs_x,
                                   std::span<const double> labels_inner,  // family-major
                                   std::span<const double> labels_outer, GOuter&& g_outer,
                                   GInner&& g_inner) {
    LossPartsT<S> parts;
    const double inv_n = 1.0 / static_cast<double>(family.size());
    for (std::size_t n = 0; n < family.size(); ++n) {
        for (std::size_t k = 0; k < obs_xi.size(); ++k) {
            const S r = g_inner(family[n], jet_variable(S(obs_xi[k]))).v -
                        S(labels_inner[n * obs_xi.size() + k]);
            parts.inner_pde += r * r;
        }
        for (std::size_t k = 0; k < obs_x.size(); ++k) {
            const S r = g_outer(family[n], jet_variable(S(obs_x[k]))).v -
                        S(labels_outer[n * obs_x.size() + k]);
            parts.outer_pde += r * r;
        }
    }
    parts.inner_pde = parts.inner_pde * S(inv_n / static_cast<double>(obs_xi.size()));
    parts.outer_pde = parts.outer_pde * S(inv_n / static_cast<double>(obs_x.size()));
    return parts;
}

}  // namespace pvd
