// Command-line front end: run / eval / infer / plot / gradcheck.
//
// PVD_THREADS caps the worker count for the dense kernels.

#include <CLI11.hpp>
#include <iostream>

#include "pvd/runner.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset = "full";
    std::string out_dir;
    std::string method;
    std::string problem;
    long long seed = -1;
    long long iterations = -1;

    pvd::ExperimentConfig resolve() const {
        pvd::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = pvd::load_config_file(config_path);
        if (!method.empty()) cfg.method = method;
        pvd::apply_preset(cfg, preset);
        if (!problem.empty()) cfg.problem = problem;
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (iterations >= 0) cfg.iterations = iterations;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--preset", opts.preset, "full (defaults) or desk (CI-speed)");
    cmd->add_option("--seed", opts.seed, "master seed override");
    cmd->add_option("--out", opts.out_dir, "output directory override");
    cmd->add_option("--method", opts.method, "method key override");
    cmd->add_option("--problem", opts.problem, "problem key override (constant|variable)");
    cmd->add_option("--iterations", opts.iterations, "iteration count override");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matched-asymptotics neural solvers for boundary-layer ODEs"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    bool quiet = false;
    auto* run_cmd = app.add_subcommand("run", "train, evaluate and persist one experiment");
    add_common(run_cmd, run_opts);
    run_cmd->add_flag("--quiet", quiet, "suppress progress lines");

    CommonOpts eval_opts;
    std::string eval_weights;
    auto* eval_cmd = app.add_subcommand("eval", "re-evaluate saved weights (no retraining)");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("--weights", eval_weights, "weight bundle path")->required();

    CommonOpts infer_opts;
    std::string infer_weights, pairs_file, infer_out = "infer.csv";
    auto* infer_cmd = app.add_subcommand("infer", "operator inference for a list of (a,b) pairs");
    add_common(infer_cmd, infer_opts);
    infer_cmd->add_option("--weights", infer_weights, "operator weight bundle")->required();
    infer_cmd->add_option("--pairs", pairs_file, "text file, one 'a b' pair per line")->required();
    infer_cmd->add_option("--curves-out", infer_out, "output CSV path");

    std::string plot_dir;
    auto* plot_cmd = app.add_subcommand("plot", "render plot.svg from a run directory");
    plot_cmd->add_option("--run", plot_dir, "run directory with curves.csv")->required();

    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference oracle suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const pvd::ExperimentConfig cfg = run_opts.resolve();
            const pvd::RunResult result = pvd::run_experiment(cfg, quiet ? nullptr : &std::cerr);
            std::cout << "run dir: " << result.run_dir << "\n";
            std::cout << "global rel_l2 " << result.report.errors.global_rel_l2 << ", l_inf "
                      << result.report.errors.global_l_inf << ", junction "
                      << result.report.errors.junction_abs_err << "\n";
            if (result.diverged) {
                std::cerr << "training diverged at iteration " << result.diverged_iteration
                          << "; kept last good checkpoint\n";
            }
            return result.exit_code;
        }
        if (eval_cmd->parsed()) {
            const pvd::ExperimentConfig cfg = eval_opts.resolve();
            const pvd::ErrorReport report = pvd::eval_experiment(cfg, eval_weights);
            std::cout << "global rel_l2 " << report.errors.global_rel_l2 << ", l_inf "
                      << report.errors.global_l_inf << "\n";
            return 0;
        }
        if (infer_cmd->parsed()) {
            const pvd::ExperimentConfig cfg = infer_opts.resolve();
            pvd::infer_operator_file(cfg, infer_weights, pairs_file, infer_out, &std::cerr);
            std::cout << "curves written to " << infer_out << "\n";
            return 0;
        }
        if (plot_cmd->parsed()) {
            pvd::write_plot_svg(plot_dir);
            std::cout << "wrote " << plot_dir << "/plot.svg\n";
            return 0;
        }
        if (grad_cmd->parsed()) {
            const pvd::GradCheckReport rep = pvd::run_gradcheck(std::cout);
            const bool ok = rep.tape_vs_fd_max_rel <= 1e-5 && rep.fast_vs_fd_max_rel <= 1e-5 &&
                            rep.jet_d1_max_rel <= 1e-4 && rep.jet_d2_max_rel <= 1e-4;
            std::cout << (ok ? "gradcheck PASS" : "gradcheck FAIL") << "\n";
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
