#include "pvd/fdm.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace pvd {

// Fritsch-Carlson slopes: monotonicity-preserving, exact on linear data.
std::vector<double> monotone_cubic_slopes(const std::vector<double>& x,
                                          const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> h(n - 1), delta(n - 1), m(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] == 0.0 || delta[i] == 0.0 || (delta[i - 1] > 0) != (delta[i] > 0)) {
            m[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double slope = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (slope * d0 <= 0.0) {
            slope = 0.0;
        } else if ((d0 > 0) != (d1 > 0) && std::abs(slope) > 3.0 * std::abs(d0)) {
            slope = 3.0 * d0;
        }
        return slope;
    };
    m[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return m;
}

double FdmSolution::eval(double x) const {
    if (x < nodes.front() - 1e-14 || x > nodes.back() + 1e-14) {
        throw std::domain_error("FdmSolution::eval: x outside the domain [0,1]");
    }
    x = std::clamp(x, nodes.front(), nodes.back());
    // Rightmost interval whose left node is <= x.
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    std::size_t i = static_cast<std::size_t>(it - nodes.begin());
    i = (i == 0) ? 0 : i - 1;
    if (i >= nodes.size() - 1) i = nodes.size() - 2;
    if (x == nodes[i]) return values[i];

    const double h = nodes[i + 1] - nodes[i];
    const double t = (x - nodes[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * values[i] + h10 * h * slopes[i] + h01 * values[i + 1] + h11 * h * slopes[i + 1];
}

FdmSolution fdm_solve(const BoundaryLayerProblem& prob, int n_nodes) {
    if (n_nodes < 1000) {
        throw std::invalid_argument("fdm_solve: need at least 1000 nodes");
    }
    if (prob.side != LayerSide::left || !(prob.a_min() > 0.0)) {
        throw std::invalid_argument("fdm_solve: only left-side layers (a > 0) are supported");
    }
    const int n = n_nodes;
    const int half = n / 2;
    const double tau =
        std::min(0.5, (2.0 * prob.epsilon / prob.a_min()) * std::log(static_cast<double>(n)));
    if (half < 8) {
        throw std::invalid_argument("fdm_solve: layer region spanned by fewer than 8 nodes");
    }

    FdmSolution sol;
    sol.transition = tau;
    sol.nodes.resize(n);
    for (int i = 0; i < half; ++i) {
        sol.nodes[i] = tau * static_cast<double>(i) / (half - 1);
    }
    for (int i = half; i < n; ++i) {
        sol.nodes[i] = tau + (1.0 - tau) * static_cast<double>(i - half + 1) / (n - half);
    }
    sol.nodes[n - 1] = 1.0;

    // Row-scaled central differences: multiplying row i by h_l*h_r keeps all
    // matrix entries O(eps + h), so the solved system's residual sits at
    // machine noise instead of 1/h^2 scale.
    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
    diag[0] = 1.0;
    rhs[0] = prob.alpha;
    diag[n - 1] = 1.0;
    rhs[n - 1] = prob.beta;
    for (int i = 1; i + 1 < n; ++i) {
        const double hl = sol.nodes[i] - sol.nodes[i - 1];
        const double hr = sol.nodes[i + 1] - sol.nodes[i];
        const double a = prob.a(sol.nodes[i]);
        const double b = prob.b(sol.nodes[i]);
        lower[i] = (2.0 * prob.epsilon * hr - a * hr * hr) / (hl + hr);
        diag[i] = -2.0 * prob.epsilon + a * (hr - hl) + b * hl * hr;
        upper[i] = (2.0 * prob.epsilon * hl + a * hl * hl) / (hl + hr);
    }

    // Thomas algorithm.
    std::vector<double> cp(n, 0.0), dp(n, 0.0);
    double pivot = diag[0];
    if (pivot == 0.0) throw std::runtime_error("fdm_solve: singular tridiagonal system");
    cp[0] = upper[0] / pivot;
    dp[0] = rhs[0] / pivot;
    for (int i = 1; i < n; ++i) {
        pivot = diag[i] - lower[i] * cp[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot)) {
            throw std::runtime_error("fdm_solve: singular tridiagonal system");
        }
        cp[i] = upper[i] / pivot;
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / pivot;
    }
    sol.values.assign(n, 0.0);
    sol.values[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) {
        sol.values[i] = dp[i] - cp[i] * sol.values[i + 1];
    }
    sol.values[0] = prob.alpha;
    sol.values[n - 1] = prob.beta;

    double rmax = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = diag[i] * sol.values[i] - rhs[i];
        if (i > 0) r += lower[i] * sol.values[i - 1];
        if (i + 1 < n) r += upper[i] * sol.values[i + 1];
        rmax = std::max(rmax, std::abs(r));
    }
    sol.max_scaled_residual = rmax;

    sol.slopes = monotone_cubic_slopes(sol.nodes, sol.values);
    return sol;
}

void fdm_export_csv(const FdmSolution& sol, std::ostream& out) {
    out << "x,u\n";
    char line[64];
    for (std::size_t i = 0; i < sol.nodes.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g\n", sol.nodes[i], sol.values[i]);
        out << line;
    }
}

}  // namespace pvd
