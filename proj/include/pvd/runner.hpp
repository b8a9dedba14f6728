#pragma once

#include <iosfwd>
#include <string>

#include "pvd/config.hpp"
#include "pvd/evaluation.hpp"

namespace pvd {

struct RunResult {
    int exit_code = 0;  // nonzero when training diverged (partial artifacts kept)
    std::string run_dir;
    ErrorReport report;
    bool diverged = false;
    long diverged_iteration = -1;
};

/// Trains per the config's method key, evaluates on the accuracy grid and
/// writes the run directory: config.txt, report.csv, trainlog.csv,
/// weights.pvdw, curves.csv (first test pair for operator runs) and
/// plot.svg. Everything is deterministic given the config.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

/// Re-evaluates saved weights without retraining; writes report.csv under
/// cfg.out_dir.
ErrorReport eval_experiment(const ExperimentConfig& cfg, const std::string& weights_path);

/// Operator inference: one (a,b) pair per line in pairs_path, curves for all
/// pairs on the accuracy grid written as CSV (pair,x,u). Pairs outside the
/// training box are evaluated anyway with a warning on `warnings`.
void infer_operator_file(const ExperimentConfig& cfg, const std::string& weights_path,
                         const std::string& pairs_path, const std::string& out_csv,
                         std::ostream* warnings = nullptr);

/// Renders plot.svg (full-domain panel + boundary-layer zoom over
/// [x0, x0 + 2 (x_j - x0)], two curves per panel) from a run directory's
/// curves.csv.
void write_plot_svg(const std::string& run_dir);

/// Differentiation oracle suite (the gradcheck subcommand).
struct GradCheckReport {
    double tape_vs_fd_max_rel = 0.0;   // param_gradient vs central differences
    double fast_vs_fd_max_rel = 0.0;   // batched training gradient vs central differences
    double jet_d1_max_rel = 0.0;       // mlp_forward first derivative vs FD
    double jet_d2_max_rel = 0.0;       // mlp_forward second derivative vs FD
    int tiny_mlps_checked = 0;
    int jet_probes_checked = 0;
};

/// Runs tape/batched-gradient checks over every loss variant on tiny nets
/// plus jet-vs-finite-difference probes. Prints one line per block to `out`.
GradCheckReport run_gradcheck(std::ostream& out, std::uint64_t seed = 20240901);

}  // namespace pvd
