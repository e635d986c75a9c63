#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cwbounds/matrix.hpp"
#include "cwbounds/nelder_mead.hpp"
#include "cwbounds/rng.hpp"
#include "cwbounds/system.hpp"

namespace cwb {

/// Quadratic certificate L(x) = x'Px with per-mode decrease margins.
struct QuadraticCertificate {
    enum class Source { Supplied, FromDiag };
    Mat P;
    Source source = Source::Supplied;
    std::vector<double> mode_margins; // largest eigenvalue of A_i'P + PA_i

    static QuadraticCertificate supplied(Mat P_in, const SwitchingSystem& system) {
        QuadraticCertificate c;
        c.P = 0.5 * (P_in + P_in.transpose());
        if (symmetric_min_eigenvalue(c.P) <= 0.0)
            throw std::invalid_argument("QuadraticCertificate: P not positive definite");
        std::vector<Mat> modes;
        for (const auto& m : system.modes) modes.push_back(m.A);
        c.mode_margins = verify_cqlf(c.P, modes);
        return c;
    }

    static QuadraticCertificate from_diag(const CMat& V, const Vec& d,
                                          const SwitchingSystem& system) {
        QuadraticCertificate c = supplied(cqlf_from_diag(V, d), system);
        c.source = Source::FromDiag;
        return c;
    }
};

/// Upper bound on the derivative of L along any admissible solution at state
/// x (valid only without delay, where theta(t) = |x(t)|):
/// max_i x'(A_i'P + PA_i)x + 2 |x'P H_i| delta_i(|x|).
inline double ldot_bound(const Mat& P, const SwitchingSystem& system, const Vec& x) {
    if (system.tau_bar != 0.0)
        throw std::invalid_argument("ldot_bound: requires tau_bar = 0");
    if (x.size() != P.rows())
        throw std::invalid_argument("ldot_bound: dimension mismatch");
    double worst = -std::numeric_limits<double>::infinity();
    const Vec Px = P * x;
    const Vec ax = x.cwiseAbs();
    for (const auto& m : system.modes) {
        const double quad = 2.0 * x.dot(m.A.transpose() * Px);
        const Vec row = (m.H.transpose() * Px).cwiseAbs(); // |x'P H_i| as a vector
        const double pert = 2.0 * row.dot(eval_bound(m.bound, ax));
        worst = std::max(worst, quad + pert);
    }
    return worst;
}

struct LevelSetReport {
    bool feasible = false;
    double k = 0.0;
    Vec x_bar;               // componentwise extents sqrt(k (P^{-1})_jj)
    int direction_samples = 0;
    double margin = 0.0;     // safety factor applied on top of the searched k
    std::optional<Vec> infeasible_direction; // witness with nonnegative slope
    int refined_directions = 0;
};

struct LevelSearchOptions {
    int samples = 10000;
    std::uint64_t seed = 0;
    double margin = 0.02;     // relative headroom added to the searched level
    int refine_worst = 32;    // directions polished by Nelder-Mead
    int refine_evals = 200;
    bool use_affine_caps = false; // closed-form per-direction level via the caps
};

namespace detail {

/// Smallest level beyond which the derivative bound stays negative along the
/// direction u. Affine caps give the closed form (b / -a)^2; the nonlinear
/// path bisects the exact bound inside the affine bracket.
inline std::optional<double> ray_level(const Mat& P, const SwitchingSystem& system,
                                       const std::vector<AffineCap>& caps,
                                       const Vec& u, bool affine_only) {
    double worst = 0.0;
    const Vec Pu = P * u;
    const Vec au = u.cwiseAbs();
    for (std::size_t i = 0; i < system.modes.size(); ++i) {
        const auto& m = system.modes[i];
        const Vec row = (m.H.transpose() * Pu).cwiseAbs();
        const double a = 2.0 * u.dot(m.A.transpose() * Pu) +
                         2.0 * row.dot(caps[i].F * au);
        if (a >= 0.0) return std::nullopt; // derivative never settles negative
        const double b = 2.0 * row.dot(caps[i].w);
        const double k_i = (b <= 0.0) ? 0.0 : (b / -a) * (b / -a);
        worst = std::max(worst, k_i);
    }
    if (affine_only || worst == 0.0) return worst;

    // The exact-bound threshold lies in (0, worst]; find the largest k with a
    // nonnegative derivative bound by scan plus bisection.
    auto h = [&](double k) {
        return ldot_bound(P, system, std::sqrt(k) * u);
    };
    const double hi = worst * (1.0 + 1e-9);
    const int grid = 64;
    double lo_bad = 0.0; // largest scanned k with h >= 0
    for (int g = grid; g >= 1; --g) {
        const double k = hi * g / grid;
        if (h(k) >= 0.0) { lo_bad = k; break; }
    }
    // If no grid point violates, the threshold sits below the smallest one;
    // the degenerate k = 0 point always has h = 0 and anchors the bracket.
    double bad = lo_bad, good = (lo_bad == 0.0)
                                    ? hi / grid
                                    : std::min(hi, lo_bad + hi / grid);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (bad + good);
        (h(mid) >= 0.0 ? bad : good) = mid;
    }
    return good;
}

} // namespace detail

/// Smallest invariant sublevel set {x'Px <= k} outside which the derivative
/// bound is negative, by direction sampling on the P-unit ellipsoid with
/// Nelder-Mead polish of the worst directions. Requires affine caps for the
/// per-direction bracket; the nonlinear bounds tighten inside it unless
/// use_affine_caps is set.
inline LevelSetReport level_search(const Mat& P, const SwitchingSystem& system,
                                   const LevelSearchOptions& opt = {}) {
    if (system.tau_bar != 0.0)
        throw std::invalid_argument("level_search: requires tau_bar = 0");
    const Eigen::Index n = P.rows();
    std::vector<AffineCap> caps;
    for (const auto& m : system.modes) caps.push_back(cap_of(m.bound, static_cast<int>(n)));

    Eigen::SelfAdjointEigenSolver<Mat> es(P);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("level_search: P not positive definite");
    // Whitening map: u = W y / |y| has u'Pu = 1 for any nonzero y.
    const Mat W = es.eigenvectors() *
                  es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal().toDenseMatrix() *
                  es.eigenvectors().transpose();

    auto direction = [&](const Vec& y) -> Vec {
        const Vec u = W * y;
        return u / std::sqrt(u.dot(P * u));
    };

    LevelSetReport rep;
    rep.margin = opt.margin;
    rep.direction_samples = opt.samples;

    Rng rng(opt.seed);
    struct Scored { double k; Vec y; };
    std::vector<Scored> scored;
    scored.reserve(opt.samples);
    for (int s = 0; s < opt.samples; ++s) {
        Vec y(n);
        for (Eigen::Index j = 0; j < n; ++j) y(j) = rng.normal();
        if (y.norm() < 1e-12) y = Vec::Ones(n);
        const Vec u = direction(y);
        const auto k = detail::ray_level(P, system, caps, u, opt.use_affine_caps);
        if (!k) {
            rep.infeasible_direction = u;
            return rep;
        }
        scored.push_back({*k, y});
    }

    std::sort(scored.begin(), scored.end(),
              [](const Scored& a, const Scored& b) { return a.k > b.k; });
    double best = scored.empty() ? 0.0 : scored.front().k;

    const int refine = std::min<int>(opt.refine_worst, static_cast<int>(scored.size()));
    for (int r = 0; r < refine; ++r) {
        bool hit_infeasible = false;
        auto fn = [&](const Eigen::VectorXd& y) -> double {
            Vec yy = y;
            if (yy.norm() < 1e-9) return 0.0;
            const Vec u = direction(yy);
            const auto k = detail::ray_level(P, system, caps, u, opt.use_affine_caps);
            if (!k) {
                hit_infeasible = true;
                rep.infeasible_direction = u;
                return -1e12; // flagged; the caller aborts
            }
            return -*k;
        };
        NelderMeadOptions nm;
        nm.max_evals = opt.refine_evals;
        nm.initial_step = 0.1;
        const auto res = nelder_mead(fn, scored[r].y / scored[r].y.norm(), nm);
        if (hit_infeasible) return rep;
        best = std::max(best, -res.fval);
        ++rep.refined_directions;
    }

    rep.feasible = true;
    rep.k = (1.0 + opt.margin) * best;
    const Mat Pinv = P.inverse();
    rep.x_bar = (rep.k * Pinv.diagonal()).cwiseSqrt();
    return rep;
}

/// Componentwise extents of the ellipsoid {x'Px <= k}: the maximum of |x_j|
/// is sqrt(k (P^{-1})_jj).
inline Vec component_extent(const Mat& P, double k) {
    if (k < 0.0) throw std::invalid_argument("component_extent: k must be >= 0");
    if (symmetric_min_eigenvalue(P) <= 0.0)
        throw std::invalid_argument("component_extent: P not positive definite");
    return (k * P.inverse().diagonal()).cwiseSqrt();
}

/// Componentwise minimum over certified boxes in a shared coordinate frame.
inline Vec combine_boxes(const std::vector<Vec>& boxes) {
    if (boxes.empty()) throw std::invalid_argument("combine_boxes: empty list");
    Vec out = boxes.front();
    for (std::size_t i = 1; i < boxes.size(); ++i) {
        if (boxes[i].size() != out.size())
            throw std::invalid_argument("combine_boxes: dimension mismatch");
        out = out.cwiseMin(boxes[i]);
    }
    return out;
}

} // namespace cwb
