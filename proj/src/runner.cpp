#include "pvd/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "pvd/collocation.hpp"
#include "pvd/fdm.hpp"
#include "pvd/rng.hpp"
#include "pvd/tape.hpp"
#include "pvd/train.hpp"
#include "pvd/weights_io.hpp"

namespace fs = std::filesystem;

namespace pvd {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

template <class ModelT>
std::string trainlog_csv(const ModelT& model) {
    std::ostringstream out;
    out << "iteration,loss_outer,loss_inner,loss_matching,loss_boundary,total\n";
    for (const auto& row : model.log) {
        out << row.iteration << ',' << g17(row.parts.outer_pde) << ',' << g17(row.parts.inner_pde)
            << ',' << g17(row.parts.matching) << ',' << g17(row.parts.boundary) << ','
            << g17(row.total) << "\n";
    }
    return out.str();
}

std::string curves_csv(const ExperimentConfig& cfg, const EvalGrid& grid,
                       std::span<const double> truth, std::span<const double> pred,
                       const std::array<double, 2>* pair) {
    std::ostringstream out;
    out << "# method = " << cfg.method << ", problem = " << cfg.problem << ", seed = " << cfg.seed
        << "\n";
    out << "# xj = " << g17(grid.junction) << "\n";
    if (pair) out << "# pair a = " << g17((*pair)[0]) << ", b = " << g17((*pair)[1]) << "\n";
    out << "x,truth,pred\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << g17(grid.xs[i]) << ',' << g17(truth[i]) << ',' << g17(pred[i]) << "\n";
    }
    return out.str();
}

std::vector<double> pi_global_points(const ExperimentConfig& cfg) {
    std::vector<double> xs;
    if (cfg.method_key() == MethodKey::pideeponet) {
        Rng rng(derive_seed(cfg.seed, SeedStream::pi_global));
        xs.resize(cfg.pi_global_points);
        for (auto& x : xs) x = rng.uniform01();
    }
    return xs;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
    const BoundaryLayerProblem prob = cfg.make_problem();
    const MethodKey method = cfg.method_key();
    fs::create_directories(cfg.out_dir);
    write_file(cfg.out_dir + "/config.txt", serialize_config(cfg));

    const CollocationSets colloc = sample_collocation(
        prob, cfg.collocation_per_region, derive_seed(cfg.seed, SeedStream::collocation));
    const EvalGrid grid = build_eval_grid(prob, cfg.eval_inner_points, cfg.eval_outer_points);
    TrainConfig tc = cfg.train_config();
    tc.progress = progress;

    RunResult result;
    result.run_dir = cfg.out_dir;

    if (prob.kind == ProblemKind::variable) {
        // Audit export of the finite-difference ground truth.
        std::ofstream out(cfg.out_dir + "/fdm_truth.csv", std::ios::binary | std::ios::trunc);
        fdm_export_csv(fdm_solve(prob, cfg.fdm_nodes), out);
    }

    if (!is_operator_method(method)) {
        TrainedModel model = train_pointwise(method, prob, colloc, tc);
        model.prandtl_side = cfg.matching_side();
        const std::vector<double> truth = truth_on_grid(prob, grid, cfg.fdm_nodes);
        result.report = evaluate_pointwise(model, grid, truth, cfg.seed);
        result.diverged = model.diverged;
        result.diverged_iteration = model.diverged_iteration;
        write_file(cfg.out_dir + "/trainlog.csv", trainlog_csv(model));
        save_weights(bundle_from_model(model), cfg.out_dir + "/weights.pvdw");
        const std::vector<double> pred = (method == MethodKey::blpinns)
                                             ? bl_pinns_eval_batch(model, grid.xs)
                                             : composite_eval_batch(model, grid.xs);
        write_file(cfg.out_dir + "/curves.csv", curves_csv(cfg, grid, truth, pred, nullptr));
    } else {
        const BcFamily family = sample_bc_family(cfg.box(), cfg.family_train, cfg.family_test,
                                                 derive_seed(cfg.seed, SeedStream::family));
        const std::vector<double> global_x = pi_global_points(cfg);
        TrainedOperator op =
            (method == MethodKey::datadriven)
                ? data_driven_fit(prob, family, cfg.obs_per_region, tc)
                : train_operator(method, prob, family, colloc, global_x, tc);
        op.prandtl_side = cfg.matching_side();
        result.report = evaluate_operator(op, grid, family.test, cfg.seed, cfg.fdm_nodes);
        result.diverged = op.diverged;
        result.diverged_iteration = op.diverged_iteration;
        write_file(cfg.out_dir + "/trainlog.csv", trainlog_csv(op));
        save_weights(bundle_from_operator(op), cfg.out_dir + "/weights.pvdw");
        const auto& pair = family.test.front();
        OperatorGridEvaluator evaluator(op, grid.xs);
        const std::vector<double> pred = evaluator.eval_pair(pair);
        const std::vector<double> truth = truth_on_grid_for_pair(prob, grid, pair, cfg.fdm_nodes);
        write_file(cfg.out_dir + "/curves.csv", curves_csv(cfg, grid, truth, pred, &pair));
    }

    {
        std::ostringstream out;
        write_report_csv(result.report, out);
        write_file(cfg.out_dir + "/report.csv", out.str());
    }
    write_plot_svg(cfg.out_dir);
    result.exit_code = result.diverged ? 2 : 0;
    return result;
}

ErrorReport eval_experiment(const ExperimentConfig& cfg, const std::string& weights_path) {
    const BoundaryLayerProblem prob = cfg.make_problem();
    const WeightBundle bundle = load_weights(weights_path);
    const EvalGrid grid = build_eval_grid(prob, cfg.eval_inner_points, cfg.eval_outer_points);
    ErrorReport report;
    if (!is_operator_method(method_key_from_string(bundle.method_key))) {
        const TrainedModel model = model_from_bundle(bundle, prob, cfg.matching_side());
        const std::vector<double> truth = truth_on_grid(prob, grid, cfg.fdm_nodes);
        report = evaluate_pointwise(model, grid, truth, cfg.seed);
    } else {
        const TrainedOperator op =
            operator_from_bundle(bundle, prob, cfg.box(), cfg.matching_side());
        const BcFamily family = sample_bc_family(cfg.box(), cfg.family_train, cfg.family_test,
                                                 derive_seed(cfg.seed, SeedStream::family));
        report = evaluate_operator(op, grid, family.test, cfg.seed, cfg.fdm_nodes);
    }
    fs::create_directories(cfg.out_dir);
    std::ostringstream out;
    write_report_csv(report, out);
    write_file(cfg.out_dir + "/report.csv", out.str());
    return report;
}

void infer_operator_file(const ExperimentConfig& cfg, const std::string& weights_path,
                         const std::string& pairs_path, const std::string& out_csv,
                         std::ostream* warnings) {
    const BoundaryLayerProblem prob = cfg.make_problem();
    const WeightBundle bundle = load_weights(weights_path);
    const TrainedOperator op = operator_from_bundle(bundle, prob, cfg.box(), cfg.matching_side());

    std::ifstream in(pairs_path);
    if (!in) throw std::runtime_error("cannot open pairs file " + pairs_path);
    std::vector<std::array<double, 2>> pairs;
    std::string line;
    while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double a, b;
        if (row >> a >> b) pairs.push_back({a, b});
    }
    if (pairs.empty()) throw std::runtime_error("pairs file holds no (a,b) rows");
    if (warnings) {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& v = pairs[i];
            if (v[0] < op.box.a_lo || v[0] > op.box.a_hi || v[1] < op.box.b_lo ||
                v[1] > op.box.b_hi) {
                (*warnings) << "warning: pair " << i << " (" << v[0] << ", " << v[1]
                            << ") lies outside the training box; extrapolating\n";
            }
        }
    }
    const EvalGrid grid = build_eval_grid(prob, cfg.eval_inner_points, cfg.eval_outer_points);
    OperatorGridEvaluator evaluator(op, grid.xs);
    std::ostringstream out;
    out << "pair,x,u\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::vector<double> u = evaluator.eval_pair(pairs[i]);
        for (std::size_t q = 0; q < grid.size(); ++q) {
            out << i << ',' << g17(grid.xs[q]) << ',' << g17(u[q]) << "\n";
        }
    }
    write_file(out_csv, out.str());
}

// ---------------------------------------------------------------------------
// SVG plot
// ---------------------------------------------------------------------------

namespace {

struct Curves {
    std::vector<double> x, truth, pred;
    double xj = 0.0;
    std::string title;
};

Curves read_curves(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("plot: missing curves file " + path);
    Curves c;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# xj = ", 0) == 0) {
            c.xj = std::stod(line.substr(7));
            continue;
        }
        if (line.rfind("# method", 0) == 0) {
            c.title = line.substr(2);
            continue;
        }
        if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double x, t, p;
        if (row >> x >> t >> p) {
            c.x.push_back(x);
            c.truth.push_back(t);
            c.pred.push_back(p);
        }
    }
    if (c.x.empty()) throw std::runtime_error("plot: curves file holds no rows");
    return c;
}

struct Panel {
    double px, py, pw, ph;        // pixel rect
    double x_lo, x_hi, y_lo, y_hi;  // data window

    double mapx(double x) const { return px + (x - x_lo) / (x_hi - x_lo) * pw; }
    double mapy(double y) const { return py + ph - (y - y_lo) / (y_hi - y_lo) * ph; }
};

void emit_polyline(std::ostringstream& svg, const Panel& p, const std::vector<double>& xs,
                   const std::vector<double>& ys, std::size_t stride, const char* style) {
    svg << "<polyline fill=\"none\" " << style << " points=\"";
    char buf[48];
    for (std::size_t i = 0; i < xs.size(); i += stride) {
        if (xs[i] < p.x_lo || xs[i] > p.x_hi) continue;
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", p.mapx(xs[i]), p.mapy(ys[i]));
        svg << buf;
    }
    svg << "\"/>\n";
}

void emit_panel(std::ostringstream& svg, const Curves& c, Panel p, const char* label) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        if (c.x[i] < p.x_lo || c.x[i] > p.x_hi) continue;
        lo = std::min({lo, c.truth[i], c.pred[i]});
        hi = std::max({hi, c.truth[i], c.pred[i]});
    }
    const double pad = 0.05 * std::max(1e-12, hi - lo);
    p.y_lo = lo - pad;
    p.y_hi = hi + pad;
    std::size_t in_window = 0;
    for (double x : c.x) in_window += (x >= p.x_lo && x <= p.x_hi);
    const std::size_t stride = std::max<std::size_t>(1, in_window / 600);
    svg << "<rect x=\"" << p.px << "\" y=\"" << p.py << "\" width=\"" << p.pw << "\" height=\""
        << p.ph << "\" fill=\"white\" stroke=\"#444\"/>\n";
    emit_polyline(svg, p, c.x, c.truth, stride, "stroke=\"#1f77b4\" stroke-width=\"1.6\"");
    emit_polyline(svg, p, c.x, c.pred, stride,
                  "stroke=\"#d62728\" stroke-width=\"1.4\" stroke-dasharray=\"6 4\"");
    svg << "<text x=\"" << p.px + 6 << "\" y=\"" << p.py + 16
        << "\" font-size=\"13\" font-family=\"sans-serif\">" << label << "</text>\n";
}

}  // namespace

void write_plot_svg(const std::string& run_dir) {
    const Curves c = read_curves(run_dir + "/curves.csv");
    const double x0 = c.x.front();
    const double zoom_hi = x0 + 2.0 * (c.xj - x0);
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1200\" height=\"540\" "
           "viewBox=\"0 0 1200 540\">\n";
    svg << "<text x=\"60\" y=\"24\" font-size=\"14\" font-family=\"sans-serif\">" << c.title
        << " (solid: reference, dashed: prediction)</text>\n";
    Panel full{60, 50, 500, 440, x0, c.x.back(), 0, 0};
    emit_panel(svg, c, full, "full domain");
    Panel zoom{660, 50, 500, 440, x0, zoom_hi, 0, 0};
    emit_panel(svg, c, zoom, "boundary layer (x up to 2 x_j)");
    svg << "</svg>\n";
    write_file(run_dir + "/plot.svg", svg.str());
}

// ---------------------------------------------------------------------------
// gradcheck: finite-difference and tape oracles over every loss variant
// ---------------------------------------------------------------------------

namespace {

using ScalarLoss = std::function<double(std::span<const double>)>;

std::vector<double> central_fd(const ScalarLoss& f, std::span<const double> params,
                               double h = 1e-6) {
    std::vector<double> grad(params.size());
    std::vector<double> work(params.begin(), params.end());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = work[i];
        work[i] = saved + h;
        const double fp = f(work);
        work[i] = saved - h;
        const double fm = f(work);
        work[i] = saved;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

double max_rel_err(std::span<const double> got, std::span<const double> want) {
    double m = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        m = std::max(m, std::abs(got[i] - want[i]) / (1.0 + std::abs(want[i])));
    }
    return m;
}

}  // namespace

GradCheckReport run_gradcheck(std::ostream& out, std::uint64_t seed) {
    GradCheckReport rep;
    const BoundaryLayerProblem prob_c = BoundaryLayerProblem::constant_case();
    const BoundaryLayerProblem prob_v = BoundaryLayerProblem::variable_case();

    auto check_pointwise = [&](MethodKey method, const BoundaryLayerProblem& prob,
                               std::uint64_t s) {
        const TrainedModel model = make_pointwise_model(method, prob, 2, 4, s);
        const CollocationSets colloc = sample_collocation(prob, 6, s + 1);
        const ScalarLoss f = [&](std::span<const double> p) {
            return reference_pointwise_loss<double>(model, p, colloc).total();
        };
        const auto tape = ad::param_gradient(
            [&](std::span<const ad::Var> vars) {
                return reference_pointwise_loss<ad::Var>(model, vars, colloc).total();
            },
            model.params);
        const auto fd = central_fd(f, model.params);
        rep.tape_vs_fd_max_rel = std::max(rep.tape_vs_fd_max_rel, max_rel_err(tape, fd));
        const auto fast = pointwise_loss_gradient(model, colloc);
        rep.fast_vs_fd_max_rel = std::max(rep.fast_vs_fd_max_rel, max_rel_err(fast, fd));
        rep.tiny_mlps_checked += model.net_count();
    };
    auto check_operator = [&](MethodKey method, const BoundaryLayerProblem& prob,
                              std::uint64_t s) {
        const TrainedOperator op = make_operator_model(method, prob, BcBox{}, 2, 4, 4, s);
        const CollocationSets colloc = sample_collocation(prob, 5, s + 1);
        const BcFamily family = sample_bc_family(BcBox{}, 3, 1, s + 2);
        std::vector<double> global_x;
        if (method == MethodKey::pideeponet) {
            Rng rng(s + 3);
            global_x.resize(8);
            for (auto& x : global_x) x = rng.uniform01();
        }
        const ScalarLoss f = [&](std::span<const double> p) {
            return reference_operator_loss<double>(op, p, family, colloc, global_x).total();
        };
        const auto tape = ad::param_gradient(
            [&](std::span<const ad::Var> vars) {
                return reference_operator_loss<ad::Var>(op, vars, family, colloc, global_x).total();
            },
            op.params);
        const auto fd = central_fd(f, op.params);
        rep.tape_vs_fd_max_rel = std::max(rep.tape_vs_fd_max_rel, max_rel_err(tape, fd));
        const auto fast = operator_loss_gradient(op, family, colloc, global_x);
        rep.fast_vs_fd_max_rel = std::max(rep.fast_vs_fd_max_rel, max_rel_err(fast, fd));
        rep.tiny_mlps_checked += 2 * op.net_count();
    };
    auto check_data_driven = [&](std::uint64_t s) {
        const TrainedOperator op =
            make_operator_model(MethodKey::datadriven, prob_c, BcBox{}, 2, 4, 4, s);
        const BcFamily family = sample_bc_family(BcBox{}, 3, 1, s + 1);
        Rng rng(s + 2);
        std::vector<double> obs_xi(5), obs_x(5);
        for (auto& xi : obs_xi) xi = prob_c.xi0 * rng.uniform01();
        for (auto& x : obs_x) x = prob_c.junction() + (1.0 - prob_c.junction()) * rng.uniform01();
        std::vector<double> li(family.train.size() * obs_xi.size());
        std::vector<double> lo(family.train.size() * obs_x.size());
        for (std::size_t n = 0; n < family.train.size(); ++n) {
            for (std::size_t k = 0; k < obs_xi.size(); ++k) {
                li[n * obs_xi.size() + k] = analytic_solution_constant(
                    prob_c.epsilon, family.train[n][0], family.train[n][1],
                    unstretch(prob_c, obs_xi[k]));
                lo[n * obs_x.size() + k] = analytic_solution_constant(
                    prob_c.epsilon, family.train[n][0], family.train[n][1], obs_x[k]);
            }
        }
        auto eval_loss = [&](auto tag, auto params_span) {
            using S = decltype(tag);
            auto net_eval = [&](int i) {
                const auto sub =
                    params_span.subspan(op.net_offset(i), op.nets[i].param_count());
                return [&op, i, sub](const std::array<double, 2>& v, const JetT<S>& q) {
                    return op.nets[i].forward<S>(sub, std::span<const double>(v.data(), 2), q);
                };
            };
            return data_driven_loss_ref<S>(family.train, obs_xi, obs_x, li, lo, net_eval(0),
                                           net_eval(1))
                .total();
        };
        const ScalarLoss f = [&](std::span<const double> p) { return eval_loss(double{}, p); };
        const auto tape = ad::param_gradient(
            [&](std::span<const ad::Var> vars) { return eval_loss(ad::Var{}, vars); }, op.params);
        const auto fd = central_fd(f, op.params);
        rep.tape_vs_fd_max_rel = std::max(rep.tape_vs_fd_max_rel, max_rel_err(tape, fd));
        rep.tiny_mlps_checked += 2 * op.net_count();
    };

    std::uint64_t s = seed;
    for (int rep_i = 0; rep_i < 8; ++rep_i) check_pointwise(MethodKey::pvdnet_leading, prob_c, ++s);
    for (int rep_i = 0; rep_i < 2; ++rep_i) check_pointwise(MethodKey::pvdnet_leading, prob_v, ++s);
    for (int rep_i = 0; rep_i < 2; ++rep_i) check_pointwise(MethodKey::pvdnet_high, prob_c, ++s);
    for (int rep_i = 0; rep_i < 2; ++rep_i) check_pointwise(MethodKey::pvdnet_high, prob_v, ++s);
    check_operator(MethodKey::pvdonet_leading, prob_c, ++s);
    check_operator(MethodKey::pvdonet_leading, prob_v, ++s);
    check_operator(MethodKey::pvdonet_high, prob_c, ++s);
    check_operator(MethodKey::pideeponet, prob_c, ++s);
    check_operator(MethodKey::pideeponet, prob_v, ++s);
    check_data_driven(++s);
    out << "gradcheck: tape-vs-FD max rel err " << rep.tape_vs_fd_max_rel << " over "
        << rep.tiny_mlps_checked << " tiny nets\n";
    out << "gradcheck: batched-vs-FD max rel err " << rep.fast_vs_fd_max_rel << "\n";

    // Jet probes: mlp_forward first/second input derivatives vs central FD.
    Rng rng(seed ^ 0xabcdef12345ULL);
    for (int probe = 0; probe < 100; ++probe) {
        const int w = 3 + static_cast<int>(rng.next_u64() % 6);
        const Mlp net = Mlp::dense(1, 2, w, 1);
        std::vector<double> params(net.param_count());
        net.init_glorot(params, rng.next_u64());
        const double x = rng.uniform(-2.0, 2.0);
        auto value = [&](double t) {
            return net.forward1<double>(params, jet_constant(t)).v;
        };
        const Jet2 jet = net.forward1<double>(params, jet_variable(x));
        const double h1 = 1e-5;
        const double fd1 = (value(x + h1) - value(x - h1)) / (2.0 * h1);
        const double h2 = 1e-4;
        const double fd2 = (value(x + h2) - 2.0 * value(x) + value(x - h2)) / (h2 * h2);
        rep.jet_d1_max_rel =
            std::max(rep.jet_d1_max_rel, std::abs(jet.d1 - fd1) / (1.0 + std::abs(fd1)));
        rep.jet_d2_max_rel =
            std::max(rep.jet_d2_max_rel, std::abs(jet.d2 - fd2) / (1.0 + std::abs(fd2)));
        ++rep.jet_probes_checked;
    }
    out << "gradcheck: jet d1 max rel err " << rep.jet_d1_max_rel << ", d2 max rel err "
        << rep.jet_d2_max_rel << " over " << rep.jet_probes_checked << " probes\n";
    return rep;
}

}  // namespace pvd
