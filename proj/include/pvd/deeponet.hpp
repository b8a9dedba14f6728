#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "pvd/jet.hpp"
#include "pvd/mlp.hpp"

namespace pvd {

/// Branch/trunk operator network combined by a p-term dot product:
///   G(v)(zeta) = sum_i branch_i(v) * trunk_i(zeta)
/// The branch encodes the input function at `sensor_dim` point values and is
/// constant in the query coordinate, so derivatives flow only through the
/// trunk. No bias after the dot product.
struct DeepOnet {
    Mlp branch;
    Mlp trunk;
    int p = 0;
    int sensor_dim = 0;

    static DeepOnet make(int sensor_dim, int hidden_layers, int hidden_width, int p);

    /// Branch parameters first, then trunk parameters.
    std::size_t param_count() const { return branch.param_count() + trunk.param_count(); }
    template <class S>
    std::span<const S> branch_params(std::span<const S> params) const {
        return params.subspan(0, branch.param_count());
    }
    template <class S>
    std::span<const S> trunk_params(std::span<const S> params) const {
        return params.subspan(branch.param_count());
    }

    void init_glorot(std::span<double> params, Rng& rng) const;

    /// Reference forward: sensor values `v`, query jet `zeta`.
    /// Throws on a sensor-length mismatch.
    template <class S>
    JetT<S> forward(std::span<const S> params, std::span<const double> v,
                    const JetT<S>& zeta) const;
};

template <class S>
JetT<S> DeepOnet::forward(std::span<const S> params, std::span<const double> v,
                          const JetT<S>& zeta) const {
    if (static_cast<int>(v.size()) != sensor_dim) {
        throw std::invalid_argument("DeepOnet::forward: sensor vector length mismatch");
    }
    std::vector<JetT<S>> sensors(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sensors[i] = jet_constant(S(v[i]));
    std::vector<JetT<S>> b(p);
    branch.forward<S>(branch_params(params), sensors, b);
    std::vector<JetT<S>> t(p);
    trunk.forward<S>(trunk_params(params), std::span<const JetT<S>>(&zeta, 1), t);
    JetT<S> out{};
    for (int i = 0; i < p; ++i) out = out + jet_scale(t[i], b[i].v);
    return out;
}

}  // namespace pvd
