#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pvd/jet.hpp"
#include "pvd/rng.hpp"

namespace pvd {

/// Fully connected network descriptor: silu on hidden layers, linear output.
///
/// Parameters live in one flat vector, per layer weights first (row-major,
/// fan_out x fan_in) then biases, layers concatenated in order. The
/// descriptor holds no parameters itself; train/eval code passes spans.
struct Mlp {
    std::vector<int> widths;

    /// input -> hidden_layers x hidden_width -> output.
    static Mlp dense(int input, int hidden_layers, int hidden_width, int output);

    int layer_count() const { return static_cast<int>(widths.size()) - 1; }
    std::size_t param_count() const;
    std::size_t weight_offset(int layer) const;
    std::size_t bias_offset(int layer) const;

    /// Glorot-uniform weights on +-sqrt(6/(fan_in+fan_out)), zero biases.
    /// Weight draw order is row-major per layer, so a seed pins every value.
    void init_glorot(std::span<double> params, std::uint64_t seed) const;
    void init_glorot(std::span<double> params, Rng& rng) const;

    /// Reference forward pass over jets, templated on the slot scalar so the
    /// same code runs on doubles and on tape variables. Input/output sizes
    /// must match widths.front()/widths.back().
    template <class S>
    void forward(std::span<const S> params, std::span<const JetT<S>> input,
                 std::span<JetT<S>> output) const;

    /// Single input, single output convenience (the point-wise nets).
    template <class S>
    JetT<S> forward1(std::span<const S> params, const JetT<S>& input) const;
};

/// Workspace for the batched jet forward/backward passes.
///
/// A batch holds B samples of K derivative slots each (K=1 plain values,
/// K=2 value+d/ds, K=3 value+d/ds+d2/ds2). Activations are stored row-major
/// with rows = B*K, sample-major: row b*K+s is slot s of sample b. The
/// affine maps act per row; silu couples the K rows of one sample.
struct MlpBatch {
    int K = 0;
    int B = 0;
    int rows() const { return K * B; }

    std::vector<std::vector<double>> y;     // per-layer inputs, y[0] = batch input
    std::vector<std::vector<double>> z;     // per-layer pre-activations
    std::vector<std::vector<double>> sig;   // sigmoid cache per hidden layer (B x width)
    std::vector<std::vector<double>> zbar;  // adjoint buffers per layer
    std::vector<double> scratch;            // transient activation adjoints

    void configure(const Mlp& net, int slots, int batch);

    std::span<double> input() { return y[0]; }
    std::span<const double> output() const { return z.back(); }
    /// Output adjoint seed; zeroed by zero_output_bar(), filled by the caller.
    std::span<double> output_bar() { return zbar.back(); }
    void zero_output_bar();

    /// Jet of sample b from the output (out_col selects the output neuron).
    Jet2 output_jet(int b, int out_col, int out_width) const;
};

/// Batched forward pass; batch.y[0] must already hold the input rows.
void forward_batch(const Mlp& net, std::span<const double> params, MlpBatch& batch);

/// Reverse sweep from batch.output_bar(); accumulates into `grad`
/// (layout identical to the parameter vector). Forward state must be intact.
void backward_batch(const Mlp& net, std::span<const double> params, MlpBatch& batch,
                    std::span<double> grad);

/// Fills the input rows of a single-input jet batch: sample b becomes the
/// lifted variable (xs[b], 1, 0) truncated to K slots.
void load_variable_inputs(MlpBatch& batch, std::span<const double> xs);

// ---------------------------------------------------------------------------
// Template definitions
// ---------------------------------------------------------------------------

template <class S>
void Mlp::forward(std::span<const S> params, std::span<const JetT<S>> input,
                  std::span<JetT<S>> output) const {
    const int layers = layer_count();
    std::vector<JetT<S>> cur(input.begin(), input.end());
    std::vector<JetT<S>> next;
    for (int l = 0; l < layers; ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        const S* w = params.data() + weight_offset(l);
        const S* b = params.data() + bias_offset(l);
        next.assign(fan_out, JetT<S>{});
        for (int j = 0; j < fan_out; ++j) {
            JetT<S> acc = jet_constant(b[j]);
            for (int m = 0; m < fan_in; ++m) {
                acc = acc + jet_scale(cur[m], w[j * fan_in + m]);
            }
            next[j] = (l + 1 < layers) ? silu(acc) : acc;
        }
        cur.swap(next);
    }
    for (std::size_t j = 0; j < output.size(); ++j) output[j] = cur[j];
}

template <class S>
JetT<S> Mlp::forward1(std::span<const S> params, const JetT<S>& input) const {
    JetT<S> out;
    forward<S>(params, std::span<const JetT<S>>(&input, 1), std::span<JetT<S>>(&out, 1));
    return out;
}

}  // namespace pvd
