#include "pvd/deeponet.hpp"

#include <stdexcept>

namespace pvd {

DeepOnet DeepOnet::make(int sensor_dim, int hidden_layers, int hidden_width, int p) {
    if (sensor_dim < 1 || p < 1) throw std::invalid_argument("DeepOnet::make: bad dimensions");
    DeepOnet net;
    net.branch = Mlp::dense(sensor_dim, hidden_layers, hidden_width, p);
    net.trunk = Mlp::dense(1, hidden_layers, hidden_width, p);
    net.p = p;
    net.sensor_dim = sensor_dim;
    return net;
}

void DeepOnet::init_glorot(std::span<double> params, Rng& rng) const {
    if (params.size() != param_count()) {
        throw std::invalid_argument("DeepOnet::init_glorot: parameter span size mismatch");
    }
    branch.init_glorot(params.subspan(0, branch.param_count()), rng);
    trunk.init_glorot(params.subspan(branch.param_count()), rng);
}

}  // namespace pvd
