#include "pvd/train.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "pvd/adam.hpp"
#include "pvd/rng.hpp"
#include "pvd/threads.hpp"

namespace pvd {

namespace {

// ---------------------------------------------------------------------------
// Small deterministic matmul helpers for the branch/trunk combination.
// Inner accumulation order is fixed per output element, so results do not
// depend on the worker count.
// ---------------------------------------------------------------------------

// C[r][c] = sum_k A[r][k] * Bt[c][k]   (A: R x Kd, Bt: C2 x Kd, C: R x C2)
void matmul_abt(const double* a, int r_count, int kd, const double* bt, int c_count, double* c) {
    auto body = [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            const double* ar = a + r * kd;
            double* cr = c + r * c_count;
            for (int col = 0; col < c_count; ++col) {
                const double* bc = bt + static_cast<std::size_t>(col) * kd;
                double acc0 = 0, acc1 = 0, acc2 = 0, acc3 = 0;
                int k = 0;
                for (; k + 4 <= kd; k += 4) {
                    acc0 += ar[k] * bc[k];
                    acc1 += ar[k + 1] * bc[k + 1];
                    acc2 += ar[k + 2] * bc[k + 2];
                    acc3 += ar[k + 3] * bc[k + 3];
                }
                double s = (acc0 + acc1) + (acc2 + acc3);
                for (; k < kd; ++k) s += ar[k] * bc[k];
                cr[col] = s;
            }
        }
    };
    if (static_cast<std::size_t>(r_count) * kd * c_count < 1 << 15) {
        body(0, static_cast<std::size_t>(r_count));
    } else {
        parallel_for(static_cast<std::size_t>(r_count), body);
    }
}

// out[q][:] += sum_n s[n][q] * b[n][:]   (s: N x Q, b: N x p, out: Q x p)
void scale_rows_acc_by_col(const double* s, int n_count, int q_count, const double* b, int p,
                           double* out) {
    auto body = [&](std::size_t q0, std::size_t q1) {
        for (std::size_t q = q0; q < q1; ++q) {
            double* oq = out + q * p;
            for (int n = 0; n < n_count; ++n) {
                const double c = s[static_cast<std::size_t>(n) * q_count + q];
                if (c == 0.0) continue;
                const double* bn = b + static_cast<std::size_t>(n) * p;
                for (int i = 0; i < p; ++i) oq[i] += c * bn[i];
            }
        }
    };
    if (static_cast<std::size_t>(n_count) * q_count * p < 1 << 15) {
        body(0, static_cast<std::size_t>(q_count));
    } else {
        parallel_for(static_cast<std::size_t>(q_count), body);
    }
}

// out[n][:] += sum_q s[n][q] * t[q][:]   (s: N x Q, t: Q x p, out: N x p)
void scale_rows_acc_by_row(const double* s, int n_count, int q_count, const double* t, int p,
                           double* out) {
    auto body = [&](std::size_t n0, std::size_t n1) {
        for (std::size_t n = n0; n < n1; ++n) {
            const double* sn = s + n * q_count;
            double* on = out + n * p;
            for (int q = 0; q < q_count; ++q) {
                if (sn[q] == 0.0) continue;
                const double* tq = t + static_cast<std::size_t>(q) * p;
                for (int i = 0; i < p; ++i) on[i] += sn[q] * tq[i];
            }
        }
    };
    if (static_cast<std::size_t>(n_count) * q_count * p < 1 << 15) {
        body(0, static_cast<std::size_t>(n_count));
    } else {
        parallel_for(static_cast<std::size_t>(n_count), body);
    }
}

// ---------------------------------------------------------------------------
// Point-wise engines
// ---------------------------------------------------------------------------

struct PwWork {
    std::vector<MlpBatch> batches;
    std::vector<double> outer_q;  // colloc outer, then x0, then x=1
    std::vector<double> inner_q;  // colloc inner, then xi0, then xi=0
    int n_o = 0;
    int n_i = 0;
};

void pw_configure(PwWork& wk, const TrainedModel& model, const CollocationSets& colloc) {
    wk.n_o = static_cast<int>(colloc.outer_x.size());
    wk.n_i = static_cast<int>(colloc.inner_xi.size());
    wk.outer_q = colloc.outer_x;
    wk.outer_q.push_back(colloc.match_x0);
    wk.outer_q.push_back(colloc.bc_outer_x);
    wk.inner_q = colloc.inner_xi;
    wk.inner_q.push_back(colloc.match_xi0);
    wk.inner_q.push_back(colloc.bc_inner_xi);
    wk.batches.resize(model.net_count());
    auto conf = [&](int i, int slots, const std::vector<double>& q) {
        wk.batches[i].configure(model.nets[i], slots, static_cast<int>(q.size()));
        load_variable_inputs(wk.batches[i], q);
    };
    if (model.is_high_order()) {
        conf(0, 3, wk.outer_q);
        conf(1, 3, wk.inner_q);
        conf(2, 2, wk.outer_q);
        conf(3, 3, wk.inner_q);
        conf(4, 3, wk.inner_q);
    } else {
        conf(0, 2, wk.outer_q);
        conf(1, 3, wk.inner_q);
    }
}

// Adds to the (row, slot) entry of a single-output batch adjoint.
inline void add_bar(MlpBatch& batch, int row, int slot, double value) {
    batch.output_bar()[static_cast<std::size_t>(row) * batch.K + slot] += value;
}


LossParts pw_leading_loss_grad(const TrainedModel& model, std::span<const double> params,
                               const LossWeights& w, PwWork& wk, std::span<double> grad) {
    const auto& prob = model.prob;
    const auto p0 = params.subspan(model.net_offset(0), model.nets[0].param_count());
    const auto p1 = params.subspan(model.net_offset(1), model.nets[1].param_count());
    auto& b0 = wk.batches[0];
    auto& b1 = wk.batches[1];
    forward_batch(model.nets[0], p0, b0);
    forward_batch(model.nets[1], p1, b1);

    LossParts parts;
    const double a0 = prob.a(prob.x0);
    double acc = 0.0;
    for (int j = 0; j < wk.n_o; ++j) {
        const Jet2 u = b0.output_jet(j, 0, 1);
        const double r = prob.a(wk.outer_q[j]) * u.d1 + prob.b(wk.outer_q[j]) * u.v;
        acc += r * r;
    }
    parts.outer_pde = acc / wk.n_o;
    acc = 0.0;
    for (int j = 0; j < wk.n_i; ++j) {
        const Jet2 u = b1.output_jet(j, 0, 1);
        const double r = u.d2 + a0 * u.d1;
        acc += r * r;
    }
    parts.inner_pde = acc / wk.n_i;

    const double o_x0 = b0.output_jet(wk.n_o, 0, 1).v;
    const double o_1 = b0.output_jet(wk.n_o + 1, 0, 1).v;
    const double i_xi0 = b1.output_jet(wk.n_i, 0, 1).v;
    const double i_0 = b1.output_jet(wk.n_i + 1, 0, 1).v;
    const double m = o_x0 - i_xi0;
    parts.matching = m * m;
    const double bi = i_0 - prob.alpha;
    const double bo = o_1 - prob.beta;
    parts.boundary = bi * bi + bo * bo;

    if (!grad.empty()) {
        b0.zero_output_bar();
        b1.zero_output_bar();
        for (int j = 0; j < wk.n_o; ++j) {
            const Jet2 u = b0.output_jet(j, 0, 1);
            const double x = wk.outer_q[j];
            const double r = prob.a(x) * u.d1 + prob.b(x) * u.v;
            const double d = 2.0 * w.outer_pde * r / wk.n_o;
            add_bar(b0, j, 0, d * prob.b(x));
            add_bar(b0, j, 1, d * prob.a(x));
        }
        for (int j = 0; j < wk.n_i; ++j) {
            const Jet2 u = b1.output_jet(j, 0, 1);
            const double r = u.d2 + a0 * u.d1;
            const double d = 2.0 * w.inner_pde * r / wk.n_i;
            add_bar(b1, j, 1, d * a0);
            add_bar(b1, j, 2, d);
        }
        add_bar(b0, wk.n_o, 0, 2.0 * w.matching * m);
        add_bar(b1, wk.n_i, 0, -2.0 * w.matching * m);
        add_bar(b0, wk.n_o + 1, 0, 2.0 * w.boundary * bo);
        add_bar(b1, wk.n_i + 1, 0, 2.0 * w.boundary * bi);
        backward_batch(model.nets[0], p0, b0,
                       grad.subspan(model.net_offset(0), model.nets[0].param_count()));
        backward_batch(model.nets[1], p1, b1,
                       grad.subspan(model.net_offset(1), model.nets[1].param_count()));
    }
    return parts;
}

LossParts pw_high_loss_grad(const TrainedModel& model, std::span<const double> params,
                            const LossWeights& w, PwWork& wk, std::span<double> grad) {
    const auto& prob = model.prob;
    const double eps = prob.epsilon;
    std::array<std::span<const double>, 5> np;
    for (int i = 0; i < 5; ++i) {
        np[i] = params.subspan(model.net_offset(i), model.nets[i].param_count());
        forward_batch(model.nets[i], np[i], wk.batches[i]);
    }
    auto& o0 = wk.batches[0];
    auto& i0 = wk.batches[1];
    auto& o1 = wk.batches[2];
    auto& ic = wk.batches[3];
    auto& i1 = wk.batches[4];

    LossParts parts;
    double acc = 0.0;
    for (int j = 0; j < wk.n_o; ++j) {
        const double x = wk.outer_q[j];
        const Jet2 u0 = o0.output_jet(j, 0, 1);
        const Jet2 u1 = o1.output_jet(j, 0, 1);
        const double r0 = prob.a(x) * u0.d1 + prob.b(x) * u0.v;
        const double r1 = prob.a(x) * u1.d1 + prob.b(x) * u1.v + u0.d2;
        acc += r0 * r0 + r1 * r1;
    }
    parts.outer_pde = acc / wk.n_o;

    acc = 0.0;
    for (int j = 0; j < wk.n_i; ++j) {
        const double xi = wk.inner_q[j];
        const double x = unstretch(prob, xi);
        const Jet2 u0 = i0.output_jet(j, 0, 1);
        const Jet2 uc = ic.output_jet(j, 0, 1);
        const Jet2 u1 = i1.output_jet(j, 0, 1);
        // Assembled two-term surrogate u0 + eps (xi uc + u1) as a jet in xi.
        const double uv = u0.v + eps * (xi * uc.v + u1.v);
        const double ud1 = u0.d1 + eps * (uc.v + xi * uc.d1 + u1.d1);
        const double ud2 = u0.d2 + eps * (2.0 * uc.d1 + xi * uc.d2 + u1.d2);
        const double r = ud2 + prob.a(x) * ud1 + eps * prob.b(x) * uv;
        acc += r * r;
    }
    parts.inner_pde = acc / wk.n_i;

    const Jet2 o0_x0 = o0.output_jet(wk.n_o, 0, 1);
    const double o1_x0 = o1.output_jet(wk.n_o, 0, 1).v;
    const double o0_1 = o0.output_jet(wk.n_o + 1, 0, 1).v;
    const double o1_1 = o1.output_jet(wk.n_o + 1, 0, 1).v;
    const double i0_xi0 = i0.output_jet(wk.n_i, 0, 1).v;
    const double ic_xi0 = ic.output_jet(wk.n_i, 0, 1).v;
    const double i1_xi0 = i1.output_jet(wk.n_i, 0, 1).v;
    const double i0_0 = i0.output_jet(wk.n_i + 1, 0, 1).v;
    const double i1_0 = i1.output_jet(wk.n_i + 1, 0, 1).v;

    const double m0 = o0_x0.v - i0_xi0;
    const double m1 = o1_x0 - i1_xi0;
    const double mc = o0_x0.d1 - ic_xi0;
    parts.matching = m0 * m0 + m1 * m1 + mc * mc;

    const double b1t = o1_1;
    const double b2t = o0_1 - prob.beta;
    const double b3t = i1_0;
    const double b4t = i0_0 - prob.alpha;
    parts.boundary = b1t * b1t + b2t * b2t + b3t * b3t + b4t * b4t;

    if (!grad.empty()) {
        for (auto& b : wk.batches) b.zero_output_bar();
        for (int j = 0; j < wk.n_o; ++j) {
            const double x = wk.outer_q[j];
            const Jet2 u0 = o0.output_jet(j, 0, 1);
            const Jet2 u1 = o1.output_jet(j, 0, 1);
            const double r0 = prob.a(x) * u0.d1 + prob.b(x) * u0.v;
            const double r1 = prob.a(x) * u1.d1 + prob.b(x) * u1.v + u0.d2;
            const double d0 = 2.0 * w.outer_pde * r0 / wk.n_o;
            const double d1 = 2.0 * w.outer_pde * r1 / wk.n_o;
            add_bar(o0, j, 0, d0 * prob.b(x));
            add_bar(o0, j, 1, d0 * prob.a(x));
            add_bar(o0, j, 2, d1);
            add_bar(o1, j, 0, d1 * prob.b(x));
            add_bar(o1, j, 1, d1 * prob.a(x));
        }
        for (int j = 0; j < wk.n_i; ++j) {
            const double xi = wk.inner_q[j];
            const double x = unstretch(prob, xi);
            const Jet2 u0 = i0.output_jet(j, 0, 1);
            const Jet2 uc = ic.output_jet(j, 0, 1);
            const Jet2 u1 = i1.output_jet(j, 0, 1);
            const double uv = u0.v + eps * (xi * uc.v + u1.v);
            const double ud1 = u0.d1 + eps * (uc.v + xi * uc.d1 + u1.d1);
            const double ud2 = u0.d2 + eps * (2.0 * uc.d1 + xi * uc.d2 + u1.d2);
            const double r = ud2 + prob.a(x) * ud1 + eps * prob.b(x) * uv;
            const double d = 2.0 * w.inner_pde * r / wk.n_i;
            // Adjoint of (value, d1, d2) of the assembled jet.
            const double sv = d * eps * prob.b(x);
            const double s1 = d * prob.a(x);
            const double s2 = d;
            add_bar(i0, j, 0, sv);
            add_bar(i0, j, 1, s1);
            add_bar(i0, j, 2, s2);
            add_bar(ic, j, 0, sv * eps * xi + s1 * eps);
            add_bar(ic, j, 1, s1 * eps * xi + s2 * 2.0 * eps);
            add_bar(ic, j, 2, s2 * eps * xi);
            add_bar(i1, j, 0, sv * eps);
            add_bar(i1, j, 1, s1 * eps);
            add_bar(i1, j, 2, s2 * eps);
        }
        add_bar(o0, wk.n_o, 0, 2.0 * w.matching * m0);
        add_bar(o0, wk.n_o, 1, 2.0 * w.matching * mc);
        add_bar(o1, wk.n_o, 0, 2.0 * w.matching * m1);
        add_bar(i0, wk.n_i, 0, -2.0 * w.matching * m0);
        add_bar(ic, wk.n_i, 0, -2.0 * w.matching * mc);
        add_bar(i1, wk.n_i, 0, -2.0 * w.matching * m1);
        add_bar(o1, wk.n_o + 1, 0, 2.0 * w.boundary * b1t);
        add_bar(o0, wk.n_o + 1, 0, 2.0 * w.boundary * b2t);
        add_bar(i1, wk.n_i + 1, 0, 2.0 * w.boundary * b3t);
        add_bar(i0, wk.n_i + 1, 0, 2.0 * w.boundary * b4t);
        for (int i = 0; i < 5; ++i) {
            backward_batch(model.nets[i], np[i], wk.batches[i],
                           grad.subspan(model.net_offset(i), model.nets[i].param_count()));
        }
    }
    return parts;
}

// ---------------------------------------------------------------------------
// Shared Adam loop
// ---------------------------------------------------------------------------

template <class LossGradFn, class ModelT>
void adam_train_loop(ModelT& model, const TrainConfig& cfg, LossGradFn&& loss_grad) {
    std::vector<double>& params = model.params;
    AdamState adam(params.size(), cfg.learning_rate);
    std::vector<double> grad(params.size(), 0.0);
    std::vector<double> best = params;
    model.best_loss = std::numeric_limits<double>::infinity();
    model.best_iteration = 0;

    auto checkpoint = [&](long iter, const LossParts& parts) {
        const double total = weighted_total(parts, cfg.weights);
        model.log.push_back({iter, parts, total});
        if (total < model.best_loss) {  // strict: earliest checkpoint wins ties
            model.best_loss = total;
            model.best_iteration = iter;
            best = params;
        }
        if (cfg.progress) {
            (*cfg.progress) << "iter " << iter << " loss " << total << "\n";
        }
    };
    auto abort_diverged = [&](long iter) {
        model.diverged = true;
        model.diverged_iteration = iter;
        params = best;
    };

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        const LossParts parts = loss_grad(std::span<const double>(params), std::span<double>(grad));
        if (!std::isfinite(weighted_total(parts, cfg.weights))) {
            abort_diverged(iter);
            return;
        }
        if (iter % cfg.checkpoint_interval == 0) checkpoint(iter, parts);
        try {
            adam_step(adam, params, grad);
        } catch (const std::runtime_error&) {
            abort_diverged(iter);
            return;
        }
    }
    const LossParts parts =
        loss_grad(std::span<const double>(params), std::span<double>());
    if (std::isfinite(weighted_total(parts, cfg.weights))) {
        checkpoint(cfg.iterations, parts);
    }
    params = best;
}

// ---------------------------------------------------------------------------
// Operator engines
// ---------------------------------------------------------------------------

struct OnetNetWork {
    MlpBatch trunk;
    MlpBatch branch;
    int K = 1;
    int Q = 0;
    int p = 0;
    std::array<std::vector<double>, 3> t;     // trunk slot matrices, Q x p
    std::array<std::vector<double>, 3> tbar;  // Q x p
    std::array<std::vector<double>, 3> v;     // N x Q combined values
    std::array<std::vector<double>, 3> s;     // N x Q adjoint seeds
};

struct OnetWork {
    std::vector<OnetNetWork> nets;
    std::vector<double> outer_q, inner_q, global_q;
    int n_o = 0, n_i = 0, n_g = 0, n_fam = 0;
};

void onet_configure_net(OnetNetWork& nw, const DeepOnet& net, int slots,
                        const std::vector<double>& queries,
                        std::span<const std::array<double, 2>> family) {
    nw.K = slots;
    nw.Q = static_cast<int>(queries.size());
    nw.p = net.p;
    nw.trunk.configure(net.trunk, slots, nw.Q);
    load_variable_inputs(nw.trunk, queries);
    const int n = static_cast<int>(family.size());
    nw.branch.configure(net.branch, 1, n);
    auto in = nw.branch.input();
    for (int i = 0; i < n; ++i) {
        in[2 * static_cast<std::size_t>(i)] = family[i][0];
        in[2 * static_cast<std::size_t>(i) + 1] = family[i][1];
    }
    for (int sidx = 0; sidx < slots; ++sidx) {
        nw.t[sidx].assign(static_cast<std::size_t>(nw.Q) * nw.p, 0.0);
        nw.tbar[sidx].assign(static_cast<std::size_t>(nw.Q) * nw.p, 0.0);
        nw.v[sidx].assign(static_cast<std::size_t>(n) * nw.Q, 0.0);
        nw.s[sidx].assign(static_cast<std::size_t>(n) * nw.Q, 0.0);
    }
}

void onet_forward(OnetNetWork& nw, const DeepOnet& net, std::span<const double> params) {
    forward_batch(net.branch, net.branch_params(params), nw.branch);
    forward_batch(net.trunk, net.trunk_params(params), nw.trunk);
    const auto out = nw.trunk.output();
    for (int sidx = 0; sidx < nw.K; ++sidx) {
        auto& tm = nw.t[sidx];
        for (int q = 0; q < nw.Q; ++q) {
            const double* row = out.data() + (static_cast<std::size_t>(q) * nw.K + sidx) * nw.p;
            std::copy(row, row + nw.p, tm.data() + static_cast<std::size_t>(q) * nw.p);
        }
    }
    const int n = nw.branch.B;
    const double* bmat = nw.branch.output().data();  // N x p
    for (int sidx = 0; sidx < nw.K; ++sidx) {
        matmul_abt(bmat, n, nw.p, nw.t[sidx].data(), nw.Q, nw.v[sidx].data());
    }
}

void onet_zero_seeds(OnetNetWork& nw) {
    for (int sidx = 0; sidx < nw.K; ++sidx) {
        std::fill(nw.s[sidx].begin(), nw.s[sidx].end(), 0.0);
    }
}

void onet_backward(OnetNetWork& nw, const DeepOnet& net, std::span<const double> params,
                   std::span<double> grad) {
    const int n = nw.branch.B;
    const double* bmat = nw.branch.output().data();
    // Trunk adjoints.
    for (int sidx = 0; sidx < nw.K; ++sidx) {
        std::fill(nw.tbar[sidx].begin(), nw.tbar[sidx].end(), 0.0);
        scale_rows_acc_by_col(nw.s[sidx].data(), n, nw.Q, bmat, nw.p, nw.tbar[sidx].data());
    }
    nw.trunk.zero_output_bar();
    auto tb = nw.trunk.output_bar();
    for (int sidx = 0; sidx < nw.K; ++sidx) {
        for (int q = 0; q < nw.Q; ++q) {
            const double* src = nw.tbar[sidx].data() + static_cast<std::size_t>(q) * nw.p;
            double* dst = tb.data() + (static_cast<std::size_t>(q) * nw.K + sidx) * nw.p;
            std::copy(src, src + nw.p, dst);
        }
    }
    // Branch adjoints: bbar[n] = sum over slots and queries of seed * trunk.
    nw.branch.zero_output_bar();
    auto bb = nw.branch.output_bar();
    for (int sidx = 0; sidx < nw.K; ++sidx) {
        scale_rows_acc_by_row(nw.s[sidx].data(), n, nw.Q, nw.t[sidx].data(), nw.p, bb.data());
    }
    const std::size_t half = net.branch.param_count();
    backward_batch(net.branch, net.branch_params(params), nw.branch, grad.subspan(0, half));
    backward_batch(net.trunk, net.trunk_params(params), nw.trunk, grad.subspan(half));
}

void onet_configure(OnetWork& wk, const TrainedOperator& op, const BcFamily& family,
                    const CollocationSets& colloc, std::span<const double> pi_global_x) {
    wk.n_o = static_cast<int>(colloc.outer_x.size());
    wk.n_i = static_cast<int>(colloc.inner_xi.size());
    wk.n_fam = static_cast<int>(family.train.size());
    wk.outer_q = colloc.outer_x;
    wk.outer_q.push_back(colloc.match_x0);
    wk.outer_q.push_back(colloc.bc_outer_x);
    wk.inner_q = colloc.inner_xi;
    wk.inner_q.push_back(colloc.match_xi0);
    wk.inner_q.push_back(colloc.bc_inner_xi);
    wk.nets.resize(op.nets.size());
    const auto fam = std::span<const std::array<double, 2>>(family.train);
    switch (op.method) {
        case MethodKey::pvdonet_leading:
            onet_configure_net(wk.nets[0], op.nets[0], 2, wk.outer_q, fam);
            onet_configure_net(wk.nets[1], op.nets[1], 3, wk.inner_q, fam);
            break;
        case MethodKey::pvdonet_high:
            onet_configure_net(wk.nets[0], op.nets[0], 3, wk.outer_q, fam);
            onet_configure_net(wk.nets[1], op.nets[1], 3, wk.inner_q, fam);
            onet_configure_net(wk.nets[2], op.nets[2], 2, wk.outer_q, fam);
            onet_configure_net(wk.nets[3], op.nets[3], 3, wk.inner_q, fam);
            onet_configure_net(wk.nets[4], op.nets[4], 3, wk.inner_q, fam);
            break;
        case MethodKey::pideeponet:
            wk.n_g = static_cast<int>(pi_global_x.size());
            wk.global_q.assign(pi_global_x.begin(), pi_global_x.end());
            wk.global_q.push_back(0.0);
            wk.global_q.push_back(1.0);
            onet_configure_net(wk.nets[0], op.nets[0], 3, wk.global_q, fam);
            break;
        default:
            throw std::invalid_argument("onet_configure: unsupported method");
    }
}

// value of net i at (family n, query q), slot s
inline double vq(const OnetNetWork& nw, int sidx, int n, int q) {
    return nw.v[sidx][static_cast<std::size_t>(n) * nw.Q + q];
}
inline void sq_add(OnetNetWork& nw, int sidx, int n, int q, double val) {
    nw.s[sidx][static_cast<std::size_t>(n) * nw.Q + q] += val;
}

LossParts onet_leading_loss_grad(const TrainedOperator& op, std::span<const double> params,
                                 const BcFamily& family, const LossWeights& w, OnetWork& wk,
                                 std::span<double> grad) {
    const auto& prob = op.prob;
    auto& outer = wk.nets[0];
    auto& inner = wk.nets[1];
    onet_forward(outer, op.nets[0], params.subspan(op.net_offset(0), op.nets[0].param_count()));
    onet_forward(inner, op.nets[1], params.subspan(op.net_offset(1), op.nets[1].param_count()));
    const int n_fam = wk.n_fam;
    const bool do_grad = !grad.empty();
    if (do_grad) {
        onet_zero_seeds(outer);
        onet_zero_seeds(inner);
    }
    const double a0 = prob.a(prob.x0);
    const double inv_n = 1.0 / n_fam;
    LossParts parts;
    double acc_o = 0.0, acc_i = 0.0, acc_m = 0.0, acc_b = 0.0;
    for (int n = 0; n < n_fam; ++n) {
        for (int j = 0; j < wk.n_o; ++j) {
            const double x = wk.outer_q[j];
            const double r = prob.a(x) * vq(outer, 1, n, j) + prob.b(x) * vq(outer, 0, n, j);
            acc_o += r * r;
            if (do_grad) {
                const double d = 2.0 * w.outer_pde * r * inv_n / wk.n_o;
                sq_add(outer, 0, n, j, d * prob.b(x));
                sq_add(outer, 1, n, j, d * prob.a(x));
            }
        }
        for (int j = 0; j < wk.n_i; ++j) {
            const double r = vq(inner, 2, n, j) + a0 * vq(inner, 1, n, j);
            acc_i += r * r;
            if (do_grad) {
                const double d = 2.0 * w.inner_pde * r * inv_n / wk.n_i;
                sq_add(inner, 1, n, j, d * a0);
                sq_add(inner, 2, n, j, d);
            }
        }
        const double m = vq(outer, 0, n, wk.n_o) - vq(inner, 0, n, wk.n_i);
        acc_m += m * m;
        const double bi = vq(inner, 0, n, wk.n_i + 1) - family.train[n][0];
        const double bo = vq(outer, 0, n, wk.n_o + 1) - family.train[n][1];
        acc_b += bi * bi + bo * bo;
        if (do_grad) {
            sq_add(outer, 0, n, wk.n_o, 2.0 * w.matching * m * inv_n);
            sq_add(inner, 0, n, wk.n_i, -2.0 * w.matching * m * inv_n);
            sq_add(inner, 0, n, wk.n_i + 1, 2.0 * w.boundary * bi * inv_n);
            sq_add(outer, 0, n, wk.n_o + 1, 2.0 * w.boundary * bo * inv_n);
        }
    }
    parts.outer_pde = acc_o * inv_n / wk.n_o;
    parts.inner_pde = acc_i * inv_n / wk.n_i;
    parts.matching = acc_m * inv_n;
    parts.boundary = acc_b * inv_n;
    if (do_grad) {
        onet_backward(outer, op.nets[0], params.subspan(op.net_offset(0), op.nets[0].param_count()),
                      grad.subspan(op.net_offset(0), op.nets[0].param_count()));
        onet_backward(inner, op.nets[1], params.subspan(op.net_offset(1), op.nets[1].param_count()),
                      grad.subspan(op.net_offset(1), op.nets[1].param_count()));
    }
    return parts;
}

LossParts onet_high_loss_grad(const TrainedOperator& op, std::span<const double> params,
                              const BcFamily& family, const LossWeights& w, OnetWork& wk,
                              std::span<double> grad) {
    const auto& prob = op.prob;
    const double eps = prob.epsilon;
    const int n_fam = wk.n_fam;
    const bool do_grad = !grad.empty();
    for (int i = 0; i < 5; ++i) {
        onet_forward(wk.nets[i], op.nets[i],
                     params.subspan(op.net_offset(i), op.nets[i].param_count()));
        if (do_grad) onet_zero_seeds(wk.nets[i]);
    }
    auto& o0 = wk.nets[0];
    auto& i0 = wk.nets[1];
    auto& o1 = wk.nets[2];
    auto& ic = wk.nets[3];
    auto& i1 = wk.nets[4];
    const double inv_n = 1.0 / n_fam;
    LossParts parts;
    double acc_o = 0.0, acc_i = 0.0, acc_m = 0.0, acc_b = 0.0;
    for (int n = 0; n < n_fam; ++n) {
        for (int j = 0; j < wk.n_o; ++j) {
            const double x = wk.outer_q[j];
            const double r0 = prob.a(x) * vq(o0, 1, n, j) + prob.b(x) * vq(o0, 0, n, j);
            const double r1 =
                prob.a(x) * vq(o1, 1, n, j) + prob.b(x) * vq(o1, 0, n, j) + vq(o0, 2, n, j);
            acc_o += r0 * r0 + r1 * r1;
            if (do_grad) {
                const double d0 = 2.0 * w.outer_pde * r0 * inv_n / wk.n_o;
                const double d1 = 2.0 * w.outer_pde * r1 * inv_n / wk.n_o;
                sq_add(o0, 0, n, j, d0 * prob.b(x));
                sq_add(o0, 1, n, j, d0 * prob.a(x));
                sq_add(o0, 2, n, j, d1);
                sq_add(o1, 0, n, j, d1 * prob.b(x));
                sq_add(o1, 1, n, j, d1 * prob.a(x));
            }
        }
        for (int j = 0; j < wk.n_i; ++j) {
            const double xi = wk.inner_q[j];
            const double x = unstretch(prob, xi);
            const double uv = vq(i0, 0, n, j) + eps * (xi * vq(ic, 0, n, j) + vq(i1, 0, n, j));
            const double ud1 = vq(i0, 1, n, j) +
                               eps * (vq(ic, 0, n, j) + xi * vq(ic, 1, n, j) + vq(i1, 1, n, j));
            const double ud2 = vq(i0, 2, n, j) +
                               eps * (2.0 * vq(ic, 1, n, j) + xi * vq(ic, 2, n, j) + vq(i1, 2, n, j));
            const double r = ud2 + prob.a(x) * ud1 + eps * prob.b(x) * uv;
            acc_i += r * r;
            if (do_grad) {
                const double d = 2.0 * w.inner_pde * r * inv_n / wk.n_i;
                const double sv = d * eps * prob.b(x);
                const double s1 = d * prob.a(x);
                const double s2 = d;
                sq_add(i0, 0, n, j, sv);
                sq_add(i0, 1, n, j, s1);
                sq_add(i0, 2, n, j, s2);
                sq_add(ic, 0, n, j, sv * eps * xi + s1 * eps);
                sq_add(ic, 1, n, j, s1 * eps * xi + s2 * 2.0 * eps);
                sq_add(ic, 2, n, j, s2 * eps * xi);
                sq_add(i1, 0, n, j, sv * eps);
                sq_add(i1, 1, n, j, s1 * eps);
                sq_add(i1, 2, n, j, s2 * eps);
            }
        }
        const double m0 = vq(o0, 0, n, wk.n_o) - vq(i0, 0, n, wk.n_i);
        const double m1 = vq(o1, 0, n, wk.n_o) - vq(i1, 0, n, wk.n_i);
        const double mcc = vq(o0, 1, n, wk.n_o) - vq(ic, 0, n, wk.n_i);
        acc_m += m0 * m0 + m1 * m1 + mcc * mcc;
        const double b1t = vq(o1, 0, n, wk.n_o + 1);
        const double b2t = vq(o0, 0, n, wk.n_o + 1) - family.train[n][1];
        const double b3t = vq(i1, 0, n, wk.n_i + 1);
        const double b4t = vq(i0, 0, n, wk.n_i + 1) - family.train[n][0];
        acc_b += b1t * b1t + b2t * b2t + b3t * b3t + b4t * b4t;
        if (do_grad) {
            sq_add(o0, 0, n, wk.n_o, 2.0 * w.matching * m0 * inv_n);
            sq_add(o1, 0, n, wk.n_o, 2.0 * w.matching * m1 * inv_n);
            sq_add(o0, 1, n, wk.n_o, 2.0 * w.matching * mcc * inv_n);
            sq_add(i0, 0, n, wk.n_i, -2.0 * w.matching * m0 * inv_n);
            sq_add(i1, 0, n, wk.n_i, -2.0 * w.matching * m1 * inv_n);
            sq_add(ic, 0, n, wk.n_i, -2.0 * w.matching * mcc * inv_n);
            sq_add(o1, 0, n, wk.n_o + 1, 2.0 * w.boundary * b1t * inv_n);
            sq_add(o0, 0, n, wk.n_o + 1, 2.0 * w.boundary * b2t * inv_n);
            sq_add(i1, 0, n, wk.n_i + 1, 2.0 * w.boundary * b3t * inv_n);
            sq_add(i0, 0, n, wk.n_i + 1, 2.0 * w.boundary * b4t * inv_n);
        }
    }
    parts.outer_pde = acc_o * inv_n / wk.n_o;
    parts.inner_pde = acc_i * inv_n / wk.n_i;
    parts.matching = acc_m * inv_n;
    parts.boundary = acc_b * inv_n;
    if (do_grad) {
        for (int i = 0; i < 5; ++i) {
            onet_backward(wk.nets[i], op.nets[i],
                          params.subspan(op.net_offset(i), op.nets[i].param_count()),
                          grad.subspan(op.net_offset(i), op.nets[i].param_count()));
        }
    }
    return parts;
}

LossParts pideeponet_loss_grad(const TrainedOperator& op, std::span<const double> params,
                               const BcFamily& family, const LossWeights& w, OnetWork& wk,
                               std::span<double> grad) {
    const auto& prob = op.prob;
    auto& g = wk.nets[0];
    onet_forward(g, op.nets[0], params);
    const int n_fam = wk.n_fam;
    const bool do_grad = !grad.empty();
    if (do_grad) onet_zero_seeds(g);
    const double inv_n = 1.0 / n_fam;
    LossParts parts;
    double acc_r = 0.0, acc_b = 0.0;
    for (int n = 0; n < n_fam; ++n) {
        for (int j = 0; j < wk.n_g; ++j) {
            const double x = wk.global_q[j];
            const double r = prob.epsilon * vq(g, 2, n, j) + prob.a(x) * vq(g, 1, n, j) +
                             prob.b(x) * vq(g, 0, n, j);
            acc_r += r * r;
            if (do_grad) {
                const double d = 2.0 * w.outer_pde * r * inv_n / wk.n_g;
                sq_add(g, 0, n, j, d * prob.b(x));
                sq_add(g, 1, n, j, d * prob.a(x));
                sq_add(g, 2, n, j, d * prob.epsilon);
            }
        }
        const double b0 = vq(g, 0, n, wk.n_g) - family.train[n][0];
        const double b1 = vq(g, 0, n, wk.n_g + 1) - family.train[n][1];
        acc_b += b0 * b0 + b1 * b1;
        if (do_grad) {
            sq_add(g, 0, n, wk.n_g, 2.0 * w.boundary * b0 * inv_n);
            sq_add(g, 0, n, wk.n_g + 1, 2.0 * w.boundary * b1 * inv_n);
        }
    }
    parts.outer_pde = acc_r * inv_n / wk.n_g;
    parts.boundary = acc_b * inv_n;
    if (do_grad) {
        onet_backward(g, op.nets[0], params, grad);
    }
    return parts;
}

// Data-driven supervision: labels are family-major matrices.
struct DataDrivenWork {
    OnetWork onet;
    std::vector<double> labels_inner;  // N x n_obs
    std::vector<double> labels_outer;
    int n_obs = 0;
};

LossParts data_driven_loss_grad(const TrainedOperator& op, std::span<const double> params,
                                const LossWeights& w, DataDrivenWork& wk, std::span<double> grad) {
    auto& outer = wk.onet.nets[0];
    auto& inner = wk.onet.nets[1];
    onet_forward(outer, op.nets[0], params.subspan(op.net_offset(0), op.nets[0].param_count()));
    onet_forward(inner, op.nets[1], params.subspan(op.net_offset(1), op.nets[1].param_count()));
    const int n_fam = wk.onet.n_fam;
    const int n_obs = wk.n_obs;
    const bool do_grad = !grad.empty();
    if (do_grad) {
        onet_zero_seeds(outer);
        onet_zero_seeds(inner);
    }
    const double inv = 1.0 / (static_cast<double>(n_fam) * n_obs);
    LossParts parts;
    double acc_i = 0.0, acc_o = 0.0;
    for (int n = 0; n < n_fam; ++n) {
        for (int k = 0; k < n_obs; ++k) {
            const double ri =
                vq(inner, 0, n, k) - wk.labels_inner[static_cast<std::size_t>(n) * n_obs + k];
            const double ro =
                vq(outer, 0, n, k) - wk.labels_outer[static_cast<std::size_t>(n) * n_obs + k];
            acc_i += ri * ri;
            acc_o += ro * ro;
            if (do_grad) {
                sq_add(inner, 0, n, k, 2.0 * w.inner_pde * ri * inv);
                sq_add(outer, 0, n, k, 2.0 * w.outer_pde * ro * inv);
            }
        }
    }
    parts.inner_pde = acc_i * inv;
    parts.outer_pde = acc_o * inv;
    if (do_grad) {
        onet_backward(outer, op.nets[0], params.subspan(op.net_offset(0), op.nets[0].param_count()),
                      grad.subspan(op.net_offset(0), op.nets[0].param_count()));
        onet_backward(inner, op.nets[1], params.subspan(op.net_offset(1), op.nets[1].param_count()),
                      grad.subspan(op.net_offset(1), op.nets[1].param_count()));
    }
    return parts;
}

int resolve_width(MethodKey method, const TrainConfig& cfg) {
    return cfg.hidden_width > 0 ? cfg.hidden_width : default_hidden_width(method);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

TrainedModel train_pointwise(MethodKey method, const BoundaryLayerProblem& prob,
                             const CollocationSets& colloc, const TrainConfig& cfg) {
    if (is_operator_method(method)) {
        throw std::invalid_argument("train_pointwise: operator method key");
    }
    TrainedModel model = make_pointwise_model(method, prob, cfg.hidden_layers,
                                              resolve_width(method, cfg), cfg.seed);
    PwWork wk;
    pw_configure(wk, model, colloc);
    const bool high = model.is_high_order();
    adam_train_loop(model, cfg, [&](std::span<const double> params, std::span<double> grad) {
        return high ? pw_high_loss_grad(model, params, cfg.weights, wk, grad)
                    : pw_leading_loss_grad(model, params, cfg.weights, wk, grad);
    });
    return model;
}

LossParts pointwise_loss(const TrainedModel& model, const CollocationSets& colloc,
                         const LossWeights& weights) {
    PwWork wk;
    pw_configure(wk, model, colloc);
    return model.is_high_order()
               ? pw_high_loss_grad(model, model.params, weights, wk, {})
               : pw_leading_loss_grad(model, model.params, weights, wk, {});
}

std::array<double, 3> vandyke_matching_terms(const TrainedModel& model) {
    if (!model.is_high_order()) {
        throw std::invalid_argument("vandyke_matching_terms: needs a five-net model");
    }
    const auto& prob = model.prob;
    auto value = [&](int i, double s) {
        return model.nets[i].forward1<double>(model.net_params(i), jet_variable(s));
    };
    const Jet2 o0 = value(0, prob.x0);
    const double m0 = o0.v - value(1, prob.xi0).v;
    const double m1 = value(2, prob.x0).v - value(4, prob.xi0).v;
    const double mc = o0.d1 - value(3, prob.xi0).v;
    return {m0 * m0, m1 * m1, mc * mc};
}

TrainedOperator train_operator(MethodKey method, const BoundaryLayerProblem& prob,
                               const BcFamily& family, const CollocationSets& colloc,
                               std::span<const double> pi_global_x, const TrainConfig& cfg) {
    if (method == MethodKey::datadriven) {
        throw std::invalid_argument("train_operator: use data_driven_fit for the supervised method");
    }
    if (!is_operator_method(method)) {
        throw std::invalid_argument("train_operator: point-wise method key");
    }
    if (method == MethodKey::pideeponet && pi_global_x.empty()) {
        throw std::invalid_argument("train_operator: pideeponet needs global collocation points");
    }
    TrainedOperator op = make_operator_model(method, prob, family.box, cfg.hidden_layers,
                                             resolve_width(method, cfg), cfg.deeponet_p, cfg.seed);
    OnetWork wk;
    onet_configure(wk, op, family, colloc, pi_global_x);
    adam_train_loop(op, cfg, [&](std::span<const double> params, std::span<double> grad) {
        switch (op.method) {
            case MethodKey::pvdonet_leading:
                return onet_leading_loss_grad(op, params, family, cfg.weights, wk, grad);
            case MethodKey::pvdonet_high:
                return onet_high_loss_grad(op, params, family, cfg.weights, wk, grad);
            default:
                return pideeponet_loss_grad(op, params, family, cfg.weights, wk, grad);
        }
    });
    return op;
}

LossParts operator_loss(const TrainedOperator& op, const BcFamily& family,
                        const CollocationSets& colloc, std::span<const double> pi_global_x,
                        const LossWeights& weights) {
    OnetWork wk;
    onet_configure(wk, op, family, colloc, pi_global_x);
    switch (op.method) {
        case MethodKey::pvdonet_leading:
            return onet_leading_loss_grad(op, op.params, family, weights, wk, {});
        case MethodKey::pvdonet_high:
            return onet_high_loss_grad(op, op.params, family, weights, wk, {});
        case MethodKey::pideeponet:
            return pideeponet_loss_grad(op, op.params, family, weights, wk, {});
        default:
            throw std::invalid_argument("operator_loss: unsupported method");
    }
}

std::vector<double> pointwise_loss_gradient(const TrainedModel& model,
                                            const CollocationSets& colloc,
                                            const LossWeights& weights) {
    PwWork wk;
    pw_configure(wk, model, colloc);
    std::vector<double> grad(model.params.size(), 0.0);
    if (model.is_high_order()) {
        pw_high_loss_grad(model, model.params, weights, wk, grad);
    } else {
        pw_leading_loss_grad(model, model.params, weights, wk, grad);
    }
    return grad;
}

std::vector<double> operator_loss_gradient(const TrainedOperator& op, const BcFamily& family,
                                           const CollocationSets& colloc,
                                           std::span<const double> pi_global_x,
                                           const LossWeights& weights) {
    OnetWork wk;
    onet_configure(wk, op, family, colloc, pi_global_x);
    std::vector<double> grad(op.params.size(), 0.0);
    switch (op.method) {
        case MethodKey::pvdonet_leading:
            onet_leading_loss_grad(op, op.params, family, weights, wk, grad);
            break;
        case MethodKey::pvdonet_high:
            onet_high_loss_grad(op, op.params, family, weights, wk, grad);
            break;
        case MethodKey::pideeponet:
            pideeponet_loss_grad(op, op.params, family, weights, wk, grad);
            break;
        default:
            throw std::invalid_argument("operator_loss_gradient: unsupported method");
    }
    return grad;
}

TrainedOperator data_driven_fit(const BoundaryLayerProblem& prob, const BcFamily& family,
                                int n_obs_per_region, const TrainConfig& cfg) {
    if (prob.kind != ProblemKind::constant) {
        throw std::invalid_argument("data_driven_fit: labels need the constant-coefficient case");
    }
    if (n_obs_per_region < 1) {
        throw std::invalid_argument("data_driven_fit: insufficient supervision (no observations)");
    }
    TrainedOperator op = make_operator_model(MethodKey::datadriven, prob, family.box,
                                             cfg.hidden_layers, resolve_width(MethodKey::datadriven, cfg),
                                             cfg.deeponet_p, cfg.seed);
    // Observation sensors: evenly spaced per region (inner in xi over
    // [0, xi0], outer in x over [x_j, 1], endpoints included), so the
    // supervision has no coverage gaps. A single point degenerates to the
    // region midpoint.
    std::vector<double> obs_xi(n_obs_per_region), obs_x(n_obs_per_region);
    const double xj = prob.junction();
    for (int k = 0; k < n_obs_per_region; ++k) {
        const double t = (n_obs_per_region == 1)
                             ? 0.5
                             : static_cast<double>(k) / (n_obs_per_region - 1);
        obs_xi[k] = prob.xi0 * t;
        obs_x[k] = xj + (1.0 - xj) * t;
    }

    DataDrivenWork wk;
    wk.n_obs = n_obs_per_region;
    wk.onet.n_fam = static_cast<int>(family.train.size());
    wk.onet.nets.resize(2);
    const auto fam = std::span<const std::array<double, 2>>(family.train);
    onet_configure_net(wk.onet.nets[0], op.nets[0], 1, obs_x, fam);
    onet_configure_net(wk.onet.nets[1], op.nets[1], 1, obs_xi, fam);
    const int n_fam = wk.onet.n_fam;
    wk.labels_inner.resize(static_cast<std::size_t>(n_fam) * n_obs_per_region);
    wk.labels_outer.resize(static_cast<std::size_t>(n_fam) * n_obs_per_region);
    for (int n = 0; n < n_fam; ++n) {
        const double a = family.train[n][0];
        const double b = family.train[n][1];
        for (int k = 0; k < n_obs_per_region; ++k) {
            wk.labels_inner[static_cast<std::size_t>(n) * n_obs_per_region + k] =
                analytic_solution_constant(prob.epsilon, a, b, unstretch(prob, obs_xi[k]));
            wk.labels_outer[static_cast<std::size_t>(n) * n_obs_per_region + k] =
                analytic_solution_constant(prob.epsilon, a, b, obs_x[k]);
        }
    }
    adam_train_loop(op, cfg, [&](std::span<const double> params, std::span<double> grad) {
        return data_driven_loss_grad(op, params, cfg.weights, wk, grad);
    });
    return op;
}

}  // namespace pvd
