#pragma once

#include <cstdint>
#include <string>

#include "pvd/bc_family.hpp"
#include "pvd/losses_ref.hpp"
#include "pvd/model.hpp"
#include "pvd/problem.hpp"
#include "pvd/train.hpp"

namespace pvd {

/// Flat key=value experiment configuration. Defaults reproduce the full
/// experimental setting: eps=1e-3, alpha=1, beta=2, xi0=20, 100k iterations,
/// 5 hidden layers (width 100, or 40 for five-net methods), 200 collocation
/// points per region, 1000/100 train/test boundary-condition pairs.
struct ExperimentConfig {
    std::string problem = "constant";  // constant | variable
    std::string method = "pvdnet-leading";
    double epsilon = 1e-3;
    double alpha = 1.0;
    double beta = 2.0;
    double xi0 = 20.0;
    int hidden_layers = 5;
    int hidden_width = 0;  // 0 -> per-method default (100 two-net, 40 five-net)
    int deeponet_p = 100;
    long iterations = 100000;
    long checkpoint_interval = 500;
    std::uint64_t seed = 0;
    int collocation_per_region = 200;
    int pi_global_points = 400;
    int family_train = 1000;
    int family_test = 100;
    double box_a_lo = 0.4;
    double box_a_hi = 1.4;
    double box_b_lo = 1.5;
    double box_b_hi = 2.5;
    int obs_per_region = 100;
    int fdm_nodes = 16384;
    int eval_inner_points = 10000;
    int eval_outer_points = 100;
    double learning_rate = 1e-3;
    double weight_outer = 1.0;
    double weight_inner = 1.0;
    double weight_matching = 1.0;
    double weight_boundary = 1.0;
    std::string prandtl_side = "outer";  // outer | inner
    std::string out_dir = "run";

    MethodKey method_key() const { return method_key_from_string(method); }
    BoundaryLayerProblem make_problem() const {
        return BoundaryLayerProblem::from_key(problem, epsilon, alpha, beta, xi0);
    }
    BcBox box() const { return {box_a_lo, box_a_hi, box_b_lo, box_b_hi}; }
    LossWeights loss_weights() const {
        return {weight_outer, weight_inner, weight_matching, weight_boundary};
    }
    MatchingSide matching_side() const;
    TrainConfig train_config() const;
};

/// Canonical serialization: fixed key order, 17-significant-digit numbers.
/// parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// "full" keeps the defaults; "desk" is the CI-speed preset: 20000
/// iterations for point-wise methods, 30000 for operator methods, and a
/// 100/20 train/test family.
void apply_preset(ExperimentConfig& cfg, const std::string& preset);

/// Derived seeds, one stream per purpose, all reproducible from cfg.seed.
enum class SeedStream : std::uint64_t {
    net_init = 0,
    collocation = 1,
    family = 2,
    observations = 3,
    pi_global = 4,
};
std::uint64_t derive_seed(std::uint64_t master, SeedStream stream);

}  // namespace pvd
