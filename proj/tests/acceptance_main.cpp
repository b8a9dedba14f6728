// Acceptance suite: one pass/fail line per criterion.
//
// Default preset is "desk" (CI-scale budgets: 20k iterations point-wise, 30k
// operator, 100/20 family); --preset full runs the full experimental
// setting (100k iterations, 1000/100 family). Criterion 5 thresholds relax
// 3x under desk, as specified; the other training criteria keep their
// stated tolerances under both presets.

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include "pvd/collocation.hpp"
#include "pvd/config.hpp"
#include "pvd/evaluation.hpp"
#include "pvd/fdm.hpp"
#include "pvd/runner.hpp"
#include "pvd/train.hpp"
#include "pvd/weights_io.hpp"

using namespace pvd;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << "CRITERION " << criterion << (pass ? " PASS  " : " FAIL  ") << detail
              << std::endl;
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct TrainedRun {
    TrainedModel model;
    ErrorReport report;
    CollocationSets colloc;
};

TrainedRun run_pointwise(MethodKey method, const std::string& problem, std::uint64_t seed,
                         long iterations, const EvalGrid& grid, std::span<const double> truth) {
    ExperimentConfig cfg;
    cfg.method = method_key_name(method);
    cfg.problem = problem;
    cfg.seed = seed;
    cfg.iterations = iterations;
    const BoundaryLayerProblem prob = cfg.make_problem();
    TrainedRun run;
    run.colloc = sample_collocation(prob, cfg.collocation_per_region,
                                    derive_seed(seed, SeedStream::collocation));
    run.model = train_pointwise(method, prob, run.colloc, cfg.train_config());
    run.report = evaluate_pointwise(run.model, grid, truth, seed);
    return run;
}

}  // namespace

int main(int argc, char** argv) {
    std::string preset = "desk";
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::strcmp(argv[i], "--preset") == 0) preset = argv[i + 1];
    }
    const bool full = (preset == "full");
    const long pw_iters = full ? 100000 : 20000;
    const long op_iters = full ? 100000 : 30000;
    const int fam_train = full ? 1000 : 100;
    const int fam_test = full ? 100 : 20;
    const double relax = full ? 1.0 : 3.0;
    std::cout << "acceptance preset: " << preset << "\n";

    const BoundaryLayerProblem prob_c = BoundaryLayerProblem::constant_case();
    const BoundaryLayerProblem prob_v = BoundaryLayerProblem::variable_case();
    const EvalGrid grid_c = build_eval_grid(prob_c);
    const EvalGrid grid_v = build_eval_grid(prob_v);
    const std::vector<double> truth_c = truth_on_grid(prob_c, grid_c);
    const std::vector<double> truth_v = truth_on_grid(prob_v, grid_v);

    // ---- 1 & 2: differentiation oracles --------------------------------
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::ostringstream quiet;
        const GradCheckReport gc = run_gradcheck(quiet);
        const double secs = seconds_since(t0);
        report(1,
               gc.tape_vs_fd_max_rel <= 1e-5 && gc.fast_vs_fd_max_rel <= 1e-5 &&
                   gc.tiny_mlps_checked >= 50 && secs < 30.0,
               "param_gradient vs FD rel err " + fmt(gc.tape_vs_fd_max_rel) + ", batched " +
                   fmt(gc.fast_vs_fd_max_rel) + " over " + std::to_string(gc.tiny_mlps_checked) +
                   " tiny nets in " + fmt(secs) + "s");
        report(2,
               gc.jet_d1_max_rel <= 1e-4 && gc.jet_d2_max_rel <= 1e-4 &&
                   gc.jet_probes_checked >= 100 && secs < 40.0,
               "jet d1/d2 vs FD rel err " + fmt(gc.jet_d1_max_rel) + "/" + fmt(gc.jet_d2_max_rel) +
                   " over " + std::to_string(gc.jet_probes_checked) + " probes");
    }

    // ---- 3: reference solver validation ---------------------------------
    {
        const auto t0 = std::chrono::steady_clock::now();
        auto rel_l2_at = [&](int n) {
            const FdmSolution sol = fdm_solve(prob_c, n);
            std::vector<double> pred(grid_c.size());
            for (std::size_t i = 0; i < grid_c.size(); ++i) pred[i] = sol.eval(grid_c.xs[i]);
            return relative_l2(pred, truth_c);
        };
        const double e4096 = rel_l2_at(4096);
        const double e8192 = rel_l2_at(8192);
        const double secs = seconds_since(t0);
        report(3, e4096 <= 1e-4 && e8192 < e4096 && secs < 10.0,
               "fdm rel_l2(4096) " + fmt(e4096) + ", rel_l2(8192) " + fmt(e8192) + " in " +
                   fmt(secs) + "s");
    }

    // ---- 4: leading asymptotic oracle vs the closed form -----------------
    {
        const LeadingAsymptoticOracle oracle{prob_c.epsilon, prob_c.alpha, prob_c.beta};
        double sup = 0.0;
        for (std::size_t i = 0; i < grid_c.size(); ++i) {
            sup = std::max(sup, std::abs(oracle.composite(grid_c.xs[i]) - truth_c[i]));
        }
        report(4, sup <= 10.0 * prob_c.epsilon,
               "sup |oracle - analytic| " + fmt(sup) + " vs bound " + fmt(10.0 * prob_c.epsilon));
    }

    // ---- 5-9: point-wise training criteria ------------------------------
    std::vector<TrainedRun> leads, highs;
    std::optional<TrainedRun> high_v;
    std::size_t matched = 0;  // index into leads/highs used by criteria 6-9
    {
        const double thr_leading = 5e-3 * relax;
        const double thr_high = 1e-3 * relax;
        const double thr_var = 1e-2 * relax;
        bool ok_leading = false, ok_high = false;
        for (std::uint64_t seed = 0; seed < 3 && !(ok_leading && ok_high); ++seed) {
            leads.push_back(run_pointwise(MethodKey::pvdnet_leading, "constant", seed, pw_iters,
                                          grid_c, truth_c));
            highs.push_back(run_pointwise(MethodKey::pvdnet_high, "constant", seed, pw_iters,
                                          grid_c, truth_c));
            std::cout << "  [seed " << seed << "] leading rel_l2 "
                      << fmt(leads.back().report.errors.global_rel_l2) << ", high rel_l2 "
                      << fmt(highs.back().report.errors.global_rel_l2) << "\n";
            ok_leading = ok_leading || leads.back().report.errors.global_rel_l2 <= thr_leading;
            ok_high = ok_high || highs.back().report.errors.global_rel_l2 <= thr_high;
        }
        for (std::size_t i = 0; i < leads.size(); ++i) {
            if (leads[i].report.errors.global_rel_l2 <= thr_leading &&
                highs[i].report.errors.global_rel_l2 <= thr_high) {
                matched = i;
                break;
            }
            if (i + 1 == leads.size()) matched = i;
        }
        bool ok_var = false;
        for (std::uint64_t seed = 0; seed < 3 && !ok_var; ++seed) {
            TrainedRun var =
                run_pointwise(MethodKey::pvdnet_high, "variable", seed, pw_iters, grid_v, truth_v);
            std::cout << "  [seed " << seed << "] variable high rel_l2 "
                      << fmt(var.report.errors.global_rel_l2) << "\n";
            ok_var = var.report.errors.global_rel_l2 <= thr_var;
            if (ok_var || seed == 2) high_v = std::move(var);
        }
        report(5, ok_leading && ok_high && ok_var,
               "constant leading " + fmt(leads[matched].report.errors.global_rel_l2) + " (thr " +
                   fmt(thr_leading) + "), high " + fmt(highs[matched].report.errors.global_rel_l2) +
                   " (thr " + fmt(thr_high) + "), variable high " +
                   fmt(high_v->report.errors.global_rel_l2) + " (thr " + fmt(thr_var) + ")");
    }
    const TrainedRun& leading_run = leads[matched];
    const TrainedRun& high_run = highs[matched];

    // 6: high-order beats leading-order in global L_inf on a matched seed.
    {
        const double lead_linf = leading_run.report.errors.global_l_inf;
        const double high_linf = high_run.report.errors.global_l_inf;
        report(6, high_linf < lead_linf,
               "seed " + std::to_string(matched) + ": high L_inf " + fmt(high_linf) +
                   " < leading L_inf " + fmt(lead_linf));
    }

    // 7: composite beats the piecewise evaluation at the junction.
    {
        TrainedModel piecewise = leading_run.model;
        piecewise.method = MethodKey::blpinns;
        const ErrorReport bl = evaluate_pointwise(piecewise, grid_c, truth_c, matched);
        const double comp_err = leading_run.report.errors.junction_abs_err;
        const double bl_err = bl.errors.junction_abs_err;
        report(7, comp_err < bl_err,
               "junction abs err: composite " + fmt(comp_err) + " < piecewise " + fmt(bl_err));
    }

    // 8: matching losses converged at the best checkpoint.
    {
        const LossParts lead_parts = pointwise_loss(leading_run.model, leading_run.colloc);
        const auto vd = vandyke_matching_terms(high_run.model);
        const bool ok = lead_parts.matching <= 1e-4 && vd[0] <= 1e-3 && vd[1] <= 1e-3 &&
                        vd[2] <= 1e-3;
        report(8, ok,
               "leading L_m " + fmt(lead_parts.matching) + "; Van Dyke terms " + fmt(vd[0]) + ", " +
                   fmt(vd[1]) + ", " + fmt(vd[2]));
    }

    // 9: trained order-reduction and first-order inner nets hit the
    //    far-field targets -beta*e and +beta*e within 10%.
    {
        const auto& model = high_run.model;
        const double uc = model.nets[3]
                              .forward1<double>(model.net_params(3), jet_constant(prob_c.xi0))
                              .v;
        const double u1 = model.nets[4]
                              .forward1<double>(model.net_params(4), jet_constant(prob_c.xi0))
                              .v;
        const double target = prob_c.beta * std::exp(1.0);
        const bool ok = std::abs(uc - (-target)) <= 0.1 * target &&
                        std::abs(u1 - target) <= 0.1 * target;
        report(9, ok,
               "uc(xi0) " + fmt(uc) + " vs " + fmt(-target) + ", u1(xi0) " + fmt(u1) + " vs " +
                   fmt(target) + " (10% bands)");
    }

    // ---- 10: operator learning separation --------------------------------
    {
        const BcFamily family = sample_bc_family(BcBox{}, fam_train, fam_test,
                                                 derive_seed(1, SeedStream::family));
        const CollocationSets colloc =
            sample_collocation(prob_c, 200, derive_seed(1, SeedStream::collocation));
        TrainConfig tc;
        tc.iterations = op_iters;
        tc.seed = derive_seed(1, SeedStream::net_init);
        std::vector<double> global_x(400);
        {
            Rng rng(derive_seed(1, SeedStream::pi_global));
            for (auto& x : global_x) x = rng.uniform01();
        }
        TrainConfig pi_tc = tc;
        const TrainedOperator pi_op =
            train_operator(MethodKey::pideeponet, prob_c, family, colloc, global_x, pi_tc);
        const ErrorReport pi_rep = evaluate_operator(pi_op, grid_c, family.test, 1);
        const TrainedOperator lead_op =
            train_operator(MethodKey::pvdonet_leading, prob_c, family, colloc, {}, tc);
        const ErrorReport lead_rep = evaluate_operator(lead_op, grid_c, family.test, 1);
        const double pi_err = pi_rep.errors.global_rel_l2;
        const double lead_err = lead_rep.errors.global_rel_l2;
        bool ok = pi_err >= 0.1 && lead_err <= 2e-2 && pi_err / lead_err >= 5.0;
        std::string detail = "pi-deeponet mean rel_l2 " + fmt(pi_err) + ", leading pvd-onet " +
                             fmt(lead_err) + " (ratio " + fmt(pi_err / std::max(lead_err, 1e-300)) +
                             ")";
        if (full) {
            const TrainedOperator high_op =
                train_operator(MethodKey::pvdonet_high, prob_c, family, colloc, {}, tc);
            const ErrorReport high_rep = evaluate_operator(high_op, grid_c, family.test, 1);
            ok = ok && lead_err <= 1.01e-2 && high_rep.errors.global_rel_l2 <= 1.5e-3;
            detail += ", high pvd-onet " + fmt(high_rep.errors.global_rel_l2);
        }
        report(10, ok, detail);
    }

    // ---- 11: supervised data-driven comparison ---------------------------
    // Stated at the full configuration (1000/100 pairs, 100k iterations);
    // run at that scale under both presets.
    {
        const BcFamily family =
            sample_bc_family(BcBox{}, 1000, 100, derive_seed(2, SeedStream::family));
        TrainConfig tc;
        tc.iterations = 100000;
        tc.seed = derive_seed(2, SeedStream::net_init);
        const TrainedOperator dd = data_driven_fit(prob_c, family, 100, tc);
        const ErrorReport rep = evaluate_operator(dd, grid_c, family.test, 2);
        report(11, rep.errors.global_l_inf <= 1e-3,
               "data-driven mean L_inf " + fmt(rep.errors.global_l_inf) + " (thr 1e-3, full config)");
    }

    // ---- 12: exact identities --------------------------------------------
    {
        bool ok = true;
        std::string why;
        Rng rng(77);
        // Constant cancellation (leading) and order-reduction shift (high).
        TrainedModel leading = make_pointwise_model(MethodKey::pvdnet_leading, prob_c, 2, 6, 3);
        std::fill(leading.params.begin(), leading.params.end(), 0.0);
        for (int i = 0; i < 2; ++i) {
            const auto& net = leading.nets[i];
            leading.params[leading.net_offset(i) + net.bias_offset(net.layer_count() - 1)] = 0.9;
        }
        for (int k = 0; k < 50; ++k) {
            const double x = rng.uniform01();
            if (std::abs(composite_eval(leading, x) - 0.9) > 1e-12) {
                ok = false;
                why = "constant cancellation";
            }
        }
        TrainedModel high = make_pointwise_model(MethodKey::pvdnet_high, prob_c, 2, 6, 5);
        TrainedModel shifted = high;
        const auto& uc_net = shifted.nets[3];
        shifted.params[shifted.net_offset(3) + uc_net.bias_offset(uc_net.layer_count() - 1)] +=
            1.3;
        for (int k = 0; k < 50; ++k) {
            const double x = rng.uniform01();
            if (std::abs(composite_eval(shifted, x) - composite_eval(high, x)) > 1e-12) {
                ok = false;
                why = "uc shift cancellation";
            }
        }
        // xi-prefactor annihilation at xi = 0 and the stretch round trip.
        for (int k = 0; k < 50; ++k) {
            const Jet2 u0{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const Jet2 u1{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const Jet2 a = assemble_inner(prob_c, 0.0, u0, Jet2{5, 5, 5}, u1);
            const Jet2 b = assemble_inner(prob_c, 0.0, u0, Jet2{-3, 0, 2}, u1);
            if (a.v != b.v) {
                ok = false;
                why = "xi annihilation";
            }
            const double x = rng.uniform01();
            if (std::abs(unstretch(prob_c, stretch(prob_c, x)) - x) > 1e-12) {
                ok = false;
                why = "stretch round trip";
            }
        }
        report(12, ok, ok ? "all identities hold to 1e-12" : ("failed: " + why));
    }

    // ---- 13: persistence and end-to-end determinism -----------------------
    {
        const fs::path tmp = fs::temp_directory_path() / "pvd_acceptance13";
        fs::remove_all(tmp);
        fs::create_directories(tmp);
        TrainedModel model = make_pointwise_model(MethodKey::pvdnet_high, prob_c, 3, 9, 313);
        save_weights(bundle_from_model(model), (tmp / "w.pvdw").string());
        const WeightBundle loaded = load_weights((tmp / "w.pvdw").string());
        bool ok = loaded.params == model.params;

        ExperimentConfig cfg;
        cfg.method = "pvdnet-leading";
        cfg.iterations = 300;
        cfg.hidden_layers = 2;
        cfg.hidden_width = 10;
        cfg.collocation_per_region = 32;
        cfg.seed = 99;
        cfg.out_dir = (tmp / "run_a").string();
        run_experiment(cfg);
        cfg.out_dir = (tmp / "run_b").string();
        run_experiment(cfg);
        auto slurp = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        const std::string ra = slurp(tmp / "run_a" / "report.csv");
        const std::string rb = slurp(tmp / "run_b" / "report.csv");
        ok = ok && !ra.empty() && ra == rb;
        report(13, ok, "weight round trip bit-identical; same-seed reports byte-identical");
    }

    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: ") << (g_failures == 0 ? "" : std::to_string(g_failures))
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
