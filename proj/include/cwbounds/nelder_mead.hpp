#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cwb {

struct NelderMeadOptions {
    int max_evals = 4000;
    double xtol = 1e-9;
    double ftol = 1e-12;
    double initial_step = 1.0;
    /// Optional early-exit: stop as soon as the best value drops below this.
    double target = -std::numeric_limits<double>::infinity();
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double fval = 0.0;
    int evals = 0;
    bool hit_target = false;
};

/// Plain downhill simplex (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Derivative-free; suitable for nonsmooth objectives such as a
/// spectral abscissa.
inline NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {}) {
    using Eigen::VectorXd;
    const int n = static_cast<int>(x0.size());
    NelderMeadResult res;
    res.evals = 0;

    std::vector<VectorXd> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    for (int i = 1; i <= n; ++i) pts[i](i - 1) += opt.initial_step;
    for (int i = 0; i <= n; ++i) {
        vals[i] = f(pts[i]);
        ++res.evals;
    }

    std::vector<int> order(n + 1);
    auto sort_simplex = [&] {
        for (int i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return vals[a] < vals[b]; });
    };

    while (res.evals < opt.max_evals) {
        sort_simplex();
        const int best = order[0], worst = order[n], second = order[n - 1];
        if (vals[best] < opt.target) {
            res.hit_target = true;
            break;
        }
        double spread = 0.0;
        for (int i = 1; i <= n; ++i)
            spread = std::max(spread, (pts[order[i]] - pts[best]).cwiseAbs().maxCoeff());
        if (spread < opt.xtol && vals[worst] - vals[best] < opt.ftol) break;

        VectorXd centroid = VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= n;

        const VectorXd xr = centroid + (centroid - pts[worst]);
        const double fr = f(xr);
        ++res.evals;
        if (fr < vals[best]) {
            const VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = f(xe);
            ++res.evals;
            if (fe < fr) { pts[worst] = xe; vals[worst] = fe; }
            else { pts[worst] = xr; vals[worst] = fr; }
        } else if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
        } else {
            const VectorXd xc = centroid + 0.5 * (pts[worst] - centroid);
            const double fc = f(xc);
            ++res.evals;
            if (fc < vals[worst]) { pts[worst] = xc; vals[worst] = fc; }
            else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    vals[i] = f(pts[i]);
                    ++res.evals;
                }
            }
        }
    }

    sort_simplex();
    res.x = pts[order[0]];
    res.fval = vals[order[0]];
    if (res.fval < opt.target) res.hit_target = true;
    return res;
}

} // namespace cwb
