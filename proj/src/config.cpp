#include "pvd/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pvd {

MatchingSide ExperimentConfig::matching_side() const {
    if (prandtl_side == "outer") return MatchingSide::outer;
    if (prandtl_side == "inner") return MatchingSide::inner;
    throw std::invalid_argument("prandtl_side must be 'outer' or 'inner'");
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig tc;
    tc.iterations = iterations;
    tc.checkpoint_interval = checkpoint_interval;
    tc.seed = derive_seed(seed, SeedStream::net_init);
    tc.learning_rate = learning_rate;
    tc.weights = loss_weights();
    tc.hidden_layers = hidden_layers;
    tc.hidden_width = hidden_width;
    tc.deeponet_p = deeponet_p;
    return tc;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "problem = " << c.problem << "\n";
    out << "method = " << c.method << "\n";
    out << "epsilon = " << fmt_double(c.epsilon) << "\n";
    out << "alpha = " << fmt_double(c.alpha) << "\n";
    out << "beta = " << fmt_double(c.beta) << "\n";
    out << "xi0 = " << fmt_double(c.xi0) << "\n";
    out << "hidden_layers = " << c.hidden_layers << "\n";
    out << "hidden_width = " << c.hidden_width << "\n";
    out << "deeponet_p = " << c.deeponet_p << "\n";
    out << "iterations = " << c.iterations << "\n";
    out << "checkpoint_interval = " << c.checkpoint_interval << "\n";
    out << "seed = " << c.seed << "\n";
    out << "collocation_per_region = " << c.collocation_per_region << "\n";
    out << "pi_global_points = " << c.pi_global_points << "\n";
    out << "family_train = " << c.family_train << "\n";
    out << "family_test = " << c.family_test << "\n";
    out << "box_a_lo = " << fmt_double(c.box_a_lo) << "\n";
    out << "box_a_hi = " << fmt_double(c.box_a_hi) << "\n";
    out << "box_b_lo = " << fmt_double(c.box_b_lo) << "\n";
    out << "box_b_hi = " << fmt_double(c.box_b_hi) << "\n";
    out << "obs_per_region = " << c.obs_per_region << "\n";
    out << "fdm_nodes = " << c.fdm_nodes << "\n";
    out << "eval_inner_points = " << c.eval_inner_points << "\n";
    out << "eval_outer_points = " << c.eval_outer_points << "\n";
    out << "learning_rate = " << fmt_double(c.learning_rate) << "\n";
    out << "weight_outer = " << fmt_double(c.weight_outer) << "\n";
    out << "weight_inner = " << fmt_double(c.weight_inner) << "\n";
    out << "weight_matching = " << fmt_double(c.weight_matching) << "\n";
    out << "weight_boundary = " << fmt_double(c.weight_boundary) << "\n";
    out << "prandtl_side = " << c.prandtl_side << "\n";
    out << "out_dir = " << c.out_dir << "\n";
    return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto as_double = [&] { return std::stod(value); };
        auto as_long = [&] { return std::stol(value); };
        auto as_int = [&] { return std::stoi(value); };
        if (key == "problem") c.problem = value;
        else if (key == "method") c.method = value;
        else if (key == "epsilon") c.epsilon = as_double();
        else if (key == "alpha") c.alpha = as_double();
        else if (key == "beta") c.beta = as_double();
        else if (key == "xi0") c.xi0 = as_double();
        else if (key == "hidden_layers") c.hidden_layers = as_int();
        else if (key == "hidden_width") c.hidden_width = as_int();
        else if (key == "deeponet_p") c.deeponet_p = as_int();
        else if (key == "iterations") c.iterations = as_long();
        else if (key == "checkpoint_interval") c.checkpoint_interval = as_long();
        else if (key == "seed") c.seed = std::stoull(value);
        else if (key == "collocation_per_region") c.collocation_per_region = as_int();
        else if (key == "pi_global_points") c.pi_global_points = as_int();
        else if (key == "family_train") c.family_train = as_int();
        else if (key == "family_test") c.family_test = as_int();
        else if (key == "box_a_lo") c.box_a_lo = as_double();
        else if (key == "box_a_hi") c.box_a_hi = as_double();
        else if (key == "box_b_lo") c.box_b_lo = as_double();
        else if (key == "box_b_hi") c.box_b_hi = as_double();
        else if (key == "obs_per_region") c.obs_per_region = as_int();
        else if (key == "fdm_nodes") c.fdm_nodes = as_int();
        else if (key == "eval_inner_points") c.eval_inner_points = as_int();
        else if (key == "eval_outer_points") c.eval_outer_points = as_int();
        else if (key == "learning_rate") c.learning_rate = as_double();
        else if (key == "weight_outer") c.weight_outer = as_double();
        else if (key == "weight_inner") c.weight_inner = as_double();
        else if (key == "weight_matching") c.weight_matching = as_double();
        else if (key == "weight_boundary") c.weight_boundary = as_double();
        else if (key == "prandtl_side") c.prandtl_side = value;
        else if (key == "out_dir") c.out_dir = value;
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_preset(ExperimentConfig& cfg, const std::string& preset) {
    if (preset == "full") return;  // defaults already carry the full setting
    if (preset == "desk") {
        cfg.iterations = is_operator_method(cfg.method_key()) ? 30000 : 20000;
        cfg.family_train = 100;
        cfg.family_test = 20;
        return;
    }
    throw std::invalid_argument("unknown preset '" + preset + "' (use full or desk)");
}

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream) {
    // splitmix64 step keyed by the stream id
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(stream) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pvd
