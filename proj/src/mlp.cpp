#include "pvd/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "pvd/fast_math.hpp"
#include "pvd/threads.hpp"

namespace pvd {

namespace {

// Eight independent accumulators: vectorizes without reassociation, and the
// combine order is fixed, so results do not depend on thread count.
double dot(const double* a, const double* b, int n) {
    double acc[8] = {0};
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        for (int j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
    }
    double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double c, const double* x, double* out, int n) {
    for (int m = 0; m < n; ++m) out[m] += c * x[m];
}

// out[m] += c0 x0[m] + c1 x1[m] + c2 x2[m] + c3 x3[m]
void axpy4(double c0, const double* x0, double c1, const double* x1, double c2, const double* x2,
           double c3, const double* x3, double* out, int n) {
    for (int m = 0; m < n; ++m) {
        out[m] += c0 * x0[m] + c1 * x1[m] + c2 * x2[m] + c3 * x3[m];
    }
}

// z[r][j] = sum_m y[r][m] * w[j][m] (+ bias[j] on value rows)
//
// Row tiles keep each weight row resident while it serves a whole tile;
// per-element arithmetic order is unchanged by the tiling.
void dense_forward(const double* y, int rows, int fan_in, const double* w, const double* bias,
                   int fan_out, int K, double* z) {
    constexpr std::size_t kTile = 24;
    const std::size_t work = static_cast<std::size_t>(rows) * fan_in * fan_out;
    auto body = [&](std::size_t r0, std::size_t r1) {
        for (std::size_t rt = r0; rt < r1; rt += kTile) {
            const std::size_t rend = std::min(r1, rt + kTile);
            for (int j = 0; j < fan_out; ++j) {
                const double* wj = w + static_cast<std::size_t>(j) * fan_in;
                for (std::size_t r = rt; r < rend; ++r) {
                    double v = dot(y + r * fan_in, wj, fan_in);
                    if (static_cast<int>(r) % K == 0) v += bias[j];
                    z[r * fan_out + j] = v;
                }
            }
        }
    };
    if (work < 1 << 15) {
        body(0, static_cast<std::size_t>(rows));
    } else {
        parallel_for(static_cast<std::size_t>(rows), body);
    }
}

// dw[j][m] += sum_r zbar[r][j] * y[r][m];  db[j] += sum over value rows of zbar[r][j]
void dense_grad(const double* zbar, const double* y, int rows, int fan_in, int fan_out, int K,
                double* dw, double* db) {
    constexpr int kRowTile = 64;
    const std::size_t work = static_cast<std::size_t>(rows) * fan_in * fan_out;
    auto body = [&](std::size_t j0, std::size_t j1) {
        for (std::size_t j = j0; j < j1; ++j) {
            // Value rows sit at r = b*K; walk them directly for the bias.
            double dbj = 0.0;
            for (int r = 0; r < rows; r += K) {
                dbj += zbar[static_cast<std::size_t>(r) * fan_out + j];
            }
            db[j] += dbj;
        }
        // Row tiles shared across the outputs of this chunk keep the
        // activation block cache-resident.
        for (int rt = 0; rt < rows; rt += kRowTile) {
            const int rend = std::min(rows, rt + kRowTile);
            for (std::size_t j = j0; j < j1; ++j) {
                double* dwj = dw + j * fan_in;
                int r = rt;
                for (; r + 4 <= rend; r += 4) {
                    const std::size_t rj = static_cast<std::size_t>(r) * fan_out + j;
                    const double* yr = y + static_cast<std::size_t>(r) * fan_in;
                    axpy4(zbar[rj], yr, zbar[rj + fan_out], yr + fan_in,
                          zbar[rj + 2 * static_cast<std::size_t>(fan_out)],
                          yr + 2 * static_cast<std::size_t>(fan_in),
                          zbar[rj + 3 * static_cast<std::size_t>(fan_out)],
                          yr + 3 * static_cast<std::size_t>(fan_in), dwj, fan_in);
                }
                for (; r < rend; ++r) {
                    const double c = zbar[static_cast<std::size_t>(r) * fan_out + j];
                    if (c != 0.0) axpy(c, y + static_cast<std::size_t>(r) * fan_in, dwj, fan_in);
                }
            }
        }
    };
    if (work < 1 << 15) {
        body(0, static_cast<std::size_t>(fan_out));
    } else {
        parallel_for(static_cast<std::size_t>(fan_out), body);
    }
}

// ybar[r][m] = sum_j zbar[r][j] * w[j][m]
void dense_backward_inputs(const double* zbar, const double* w, int rows, int fan_in, int fan_out,
                           double* ybar) {
    constexpr std::size_t kTile = 24;
    const std::size_t work = static_cast<std::size_t>(rows) * fan_in * fan_out;
    auto body = [&](std::size_t r0, std::size_t r1) {
        for (std::size_t rt = r0; rt < r1; rt += kTile) {
            const std::size_t rend = std::min(r1, rt + kTile);
            for (std::size_t r = rt; r < rend; ++r) {
                double* yr = ybar + r * fan_in;
                for (int m = 0; m < fan_in; ++m) yr[m] = 0.0;
            }
            int j = 0;
            for (; j + 4 <= fan_out; j += 4) {
                const double* wj = w + static_cast<std::size_t>(j) * fan_in;
                for (std::size_t r = rt; r < rend; ++r) {
                    const double* zr = zbar + r * fan_out;
                    axpy4(zr[j], wj, zr[j + 1], wj + fan_in, zr[j + 2],
                          wj + 2 * static_cast<std::size_t>(fan_in), zr[j + 3],
                          wj + 3 * static_cast<std::size_t>(fan_in), ybar + r * fan_in, fan_in);
                }
            }
            for (; j < fan_out; ++j) {
                const double* wj = w + static_cast<std::size_t>(j) * fan_in;
                for (std::size_t r = rt; r < rend; ++r) {
                    const double c = zbar[r * fan_out + j];
                    if (c != 0.0) axpy(c, wj, ybar + r * fan_in, fan_in);
                }
            }
        }
    };
    if (work < 1 << 15) {
        body(0, static_cast<std::size_t>(rows));
    } else {
        parallel_for(static_cast<std::size_t>(rows), body);
    }
}

// silu derivatives from the cached sigmoid:
//   f1 = s + z s',  f2 = 2 s' + z s'' ,  f3 = 3 s'' + z s'''
// with s' = s(1-s), s'' = s'(1-2s), s''' = s''(1-2s) - 2 s'^2.
struct SiluDerivs {
    double f1, f2, f3;
};

SiluDerivs silu_derivs(double zv, double s, bool need_f3) {
    const double sp = s * (1.0 - s);
    const double spp = sp * (1.0 - 2.0 * s);
    SiluDerivs d;
    d.f1 = s + zv * sp;
    d.f2 = 2.0 * sp + zv * spp;
    d.f3 = need_f3 ? 3.0 * spp + zv * (spp * (1.0 - 2.0 * s) - 2.0 * sp * sp) : 0.0;
    return d;
}

void silu_forward(const double* z, int B, int K, int width, double* sig, double* y) {
    auto body = [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            const std::size_t base = b * K * width;
            const std::size_t w = static_cast<std::size_t>(width);
            double* sb = sig + b * w;
            for (int j = 0; j < width; ++j) {
                const double zv = z[base + j];
                const double s = fast_sigmoid(zv);
                sb[j] = s;
                const SiluDerivs d = silu_derivs(zv, s, false);
                y[base + j] = zv * s;
                if (K >= 2) {
                    const double zd1 = z[base + w + j];
                    y[base + w + j] = d.f1 * zd1;
                    if (K >= 3) {
                        y[base + 2 * w + j] = d.f2 * zd1 * zd1 + d.f1 * z[base + 2 * w + j];
                    }
                }
            }
        }
    };
    if (static_cast<std::size_t>(B) * width < 1 << 12) {
        body(0, static_cast<std::size_t>(B));
    } else {
        parallel_for(static_cast<std::size_t>(B), body);
    }
}

// Adjoints through y = silu(z), slot-coupled within each sample:
//   zbar.v  = ybar.v f1 + ybar.d1 f2 zd1 + ybar.d2 (f3 zd1^2 + f2 zd2)
//   zbar.d1 = ybar.d1 f1 + ybar.d2 2 f2 zd1
//   zbar.d2 = ybar.d2 f1
void silu_backward(const double* ybar, const double* z, const double* sig, int B, int K, int width,
                   double* zbar) {
    auto body = [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            const std::size_t base = b * K * width;
            const std::size_t w = static_cast<std::size_t>(width);
            const double* sb = sig + b * w;
            for (int j = 0; j < width; ++j) {
                const double zv = z[base + j];
                const SiluDerivs d = silu_derivs(zv, sb[j], K >= 3);
                double acc_v = ybar[base + j] * d.f1;
                if (K >= 2) {
                    const double zd1 = z[base + w + j];
                    const double gd1 = ybar[base + w + j];
                    acc_v += gd1 * d.f2 * zd1;
                    double acc_d1 = gd1 * d.f1;
                    if (K >= 3) {
                        const double zd2 = z[base + 2 * w + j];
                        const double gd2 = ybar[base + 2 * w + j];
                        acc_v += gd2 * (d.f3 * zd1 * zd1 + d.f2 * zd2);
                        acc_d1 += gd2 * 2.0 * d.f2 * zd1;
                        zbar[base + 2 * w + j] = gd2 * d.f1;
                    }
                    zbar[base + w + j] = acc_d1;
                }
                zbar[base + j] = acc_v;
            }
        }
    };
    if (static_cast<std::size_t>(B) * width < 1 << 12) {
        body(0, static_cast<std::size_t>(B));
    } else {
        parallel_for(static_cast<std::size_t>(B), body);
    }
}

}  // namespace

Mlp Mlp::dense(int input, int hidden_layers, int hidden_width, int output) {
    if (input < 1 || hidden_width < 1 || output < 1 || hidden_layers < 0) {
        throw std::invalid_argument("Mlp::dense: widths must be positive");
    }
    Mlp net;
    net.widths.push_back(input);
    for (int i = 0; i < hidden_layers; ++i) net.widths.push_back(hidden_width);
    net.widths.push_back(output);
    return net;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (int l = 0; l < layer_count(); ++l) {
        n += static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
    }
    return n;
}

std::size_t Mlp::weight_offset(int layer) const {
    std::size_t off = 0;
    for (int l = 0; l < layer; ++l) {
        off += static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
    }
    return off;
}

std::size_t Mlp::bias_offset(int layer) const {
    return weight_offset(layer) + static_cast<std::size_t>(widths[layer]) * widths[layer + 1];
}

void Mlp::init_glorot(std::span<double> params, std::uint64_t seed) const {
    Rng rng(seed);
    init_glorot(params, rng);
}

void Mlp::init_glorot(std::span<double> params, Rng& rng) const {
    if (params.size() != param_count()) {
        throw std::invalid_argument("Mlp::init_glorot: parameter span size mismatch");
    }
    for (int l = 0; l < layer_count(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("Mlp: zero width layer");
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        double* w = params.data() + weight_offset(l);
        for (int i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-bound, bound);
        double* b = params.data() + bias_offset(l);
        for (int j = 0; j < fan_out; ++j) b[j] = 0.0;
    }
}

void MlpBatch::configure(const Mlp& net, int slots, int batch) {
    if (slots < 1 || slots > 3) throw std::invalid_argument("MlpBatch: slots must be 1..3");
    K = slots;
    B = batch;
    const int layers = net.layer_count();
    const std::size_t r = static_cast<std::size_t>(rows());
    y.resize(layers);
    z.resize(layers);
    sig.resize(layers > 0 ? layers - 1 : 0);
    zbar.resize(layers);
    std::size_t max_width = 0;
    for (int l = 0; l < layers; ++l) {
        y[l].assign(r * net.widths[l], 0.0);
        z[l].assign(r * net.widths[l + 1], 0.0);
        zbar[l].assign(r * net.widths[l + 1], 0.0);
        if (l + 1 < layers) sig[l].assign(static_cast<std::size_t>(B) * net.widths[l + 1], 0.0);
        max_width = std::max(max_width, static_cast<std::size_t>(net.widths[l + 1]));
    }
    scratch.assign(r * max_width, 0.0);
}

void MlpBatch::zero_output_bar() {
    auto& bar = zbar.back();
    std::fill(bar.begin(), bar.end(), 0.0);
}

Jet2 MlpBatch::output_jet(int b, int out_col, int out_width) const {
    const auto& out = z.back();
    const std::size_t base = static_cast<std::size_t>(b) * K * out_width + out_col;
    Jet2 jet{out[base], 0.0, 0.0};
    if (K >= 2) jet.d1 = out[base + out_width];
    if (K >= 3) jet.d2 = out[base + 2 * static_cast<std::size_t>(out_width)];
    return jet;
}

void forward_batch(const Mlp& net, std::span<const double> params, MlpBatch& batch) {
    if (params.size() != net.param_count()) {
        throw std::invalid_argument("forward_batch: parameter span size mismatch");
    }
    const int layers = net.layer_count();
    const int rows = batch.rows();
    for (int l = 0; l < layers; ++l) {
        const int fan_in = net.widths[l];
        const int fan_out = net.widths[l + 1];
        dense_forward(batch.y[l].data(), rows, fan_in, params.data() + net.weight_offset(l),
                      params.data() + net.bias_offset(l), fan_out, batch.K, batch.z[l].data());
        if (l + 1 < layers) {
            silu_forward(batch.z[l].data(), batch.B, batch.K, fan_out, batch.sig[l].data(),
                         batch.y[l + 1].data());
        }
    }
}

void backward_batch(const Mlp& net, std::span<const double> params, MlpBatch& batch,
                    std::span<double> grad) {
    if (grad.size() != net.param_count()) {
        throw std::invalid_argument("backward_batch: gradient span size mismatch");
    }
    const int layers = net.layer_count();
    const int rows = batch.rows();
    for (int l = layers - 1; l >= 0; --l) {
        const int fan_in = net.widths[l];
        const int fan_out = net.widths[l + 1];
        dense_grad(batch.zbar[l].data(), batch.y[l].data(), rows, fan_in, fan_out, batch.K,
                   grad.data() + net.weight_offset(l), grad.data() + net.bias_offset(l));
        if (l == 0) break;
        dense_backward_inputs(batch.zbar[l].data(), params.data() + net.weight_offset(l), rows,
                              fan_in, fan_out, batch.scratch.data());
        silu_backward(batch.scratch.data(), batch.z[l - 1].data(), batch.sig[l - 1].data(), batch.B,
                      batch.K, fan_in, batch.zbar[l - 1].data());
    }
}

void load_variable_inputs(MlpBatch& batch, std::span<const double> xs) {
    if (static_cast<int>(xs.size()) != batch.B) {
        throw std::invalid_argument("load_variable_inputs: batch size mismatch");
    }
    auto in = batch.input();
    for (int b = 0; b < batch.B; ++b) {
        in[static_cast<std::size_t>(b) * batch.K] = xs[b];
        if (batch.K >= 2) in[static_cast<std::size_t>(b) * batch.K + 1] = 1.0;
        if (batch.K >= 3) in[static_cast<std::size_t>(b) * batch.K + 2] = 0.0;
    }
}

}  // namespace pvd
