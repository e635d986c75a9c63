#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwbounds/matrix.hpp"
#include "cwbounds/system.hpp"
#include "cwbounds/transform.hpp"

namespace cwb {

/// Componentwise maximum of |B w| over the box |w| <= d.
struct WorstCaseImage {
    Vec value;
    bool exact = true; // false when the |B| d relaxation was used (q > 20)
};

/// For each row b of B, the modulus |b . w| is convex in w, so the maximum
/// over the box |w| <= d is attained at a vertex; q <= 20 keeps the 2^q
/// enumeration affordable. Real B collapses to |B| d exactly.
inline WorstCaseImage worst_case_image(const CMat& B, const Vec& d,
                                       bool allow_overbound = false) {
    if (B.cols() != d.size())
        throw std::invalid_argument("worst_case_image: dimension mismatch");
    if (d.size() && d.minCoeff() < 0.0)
        throw std::invalid_argument("worst_case_image: d must be nonnegative");
    const Eigen::Index p = B.rows(), q = B.cols();
    WorstCaseImage out;

    if (B.imag().isZero(0.0)) {
        out.value = B.real().cwiseAbs() * d;
        return out;
    }
    if (q > 20) {
        if (!allow_overbound)
            throw std::invalid_argument(
                "worst_case_image: q > 20 requires the overbound opt-in");
        out.value = B.cwiseAbs() * d;
        out.exact = false;
        return out;
    }

    out.value = Vec::Zero(p);
    const std::size_t patterns = std::size_t{1} << q;
    for (Eigen::Index r = 0; r < p; ++r) {
        double best = 0.0;
        for (std::size_t s = 0; s < patterns; ++s) {
            std::complex<double> acc = 0.0;
            for (Eigen::Index j = 0; j < q; ++j) {
                const double w = ((s >> j) & 1u) ? d(j) : -d(j);
                acc += B(r, j) * w;
            }
            best = std::max(best, std::abs(acc));
        }
        out.value(r) = best;
    }
    return out;
}

/// CNI bound on the worst transformed perturbation as a function of the
/// transformed-state box x: psi(x) = max_i worst_case_image(V^{-1} H_i,
/// delta_i(|V| x)).
using DeltaFn = std::function<Vec(const Vec&)>;

inline DeltaFn make_psi(const TransformCandidate& candidate,
                        const SwitchingSystem& system) {
    std::vector<CMat> ViH;
    ViH.reserve(system.modes.size());
    for (const auto& m : system.modes)
        ViH.push_back(candidate.V_inverse * m.H.cast<std::complex<double>>());
    const Mat aV = candidate.abs_V();
    std::vector<PerturbationBound> bounds;
    for (const auto& m : system.modes) bounds.push_back(m.bound);
    return [ViH, aV, bounds](const Vec& x) -> Vec {
        Vec out = Vec::Zero(aV.rows());
        const Vec theta = aV * x;
        for (std::size_t i = 0; i < ViH.size(); ++i) {
            const Vec di = eval_bound(bounds[i], theta);
            out = out.cwiseMax(worst_case_image(ViH[i], di).value);
        }
        return out;
    };
}

inline Vec psi(const Vec& x, const TransformCandidate& candidate,
               const SwitchingSystem& system) {
    if (x.size() && x.minCoeff() < 0.0)
        throw std::invalid_argument("psi: x must be nonnegative");
    return make_psi(candidate, system)(x);
}

/// Constant-perturbation transient/ultimate bound artifact: with z the worst
/// transformed disturbance and eta the initial excess, the envelope
/// t |-> -Lambda^{-1} z + e^{Lambda t} eta dominates |V^{-1} x(t)| and decays
/// toward the ultimate bound.
struct ConstantBoundReport {
    Vec z;
    Vec eta;
    Vec ultimate; // -Lambda^{-1} z
    Mat Lambda;

    Vec envelope(double t) const {
        return ultimate + matrix_exponential(Lambda, t) * eta;
    }
};

inline ConstantBoundReport constant_bounds(const TransformCandidate& candidate,
                                           const SwitchingSystem& system,
                                           const std::vector<Vec>& mode_w,
                                           const Vec& initial_box) {
    if (mode_w.size() != system.modes.size())
        throw std::invalid_argument("constant_bounds: one w per mode required");
    const auto check = metzler_hurwitz_check(candidate.Lambda);
    if (!check.is_hurwitz)
        throw std::invalid_argument("constant_bounds: Lambda is not Hurwitz");
    const Mat& negLinv = *check.neg_inverse;

    ConstantBoundReport rep;
    rep.Lambda = candidate.Lambda;
    rep.z = Vec::Zero(candidate.Lambda.rows());
    for (std::size_t i = 0; i < mode_w.size(); ++i) {
        const CMat ViH =
            candidate.V_inverse * system.modes[i].H.cast<std::complex<double>>();
        rep.z = rep.z.cwiseMax(worst_case_image(ViH, mode_w[i]).value);
    }
    rep.ultimate = negLinv * rep.z;
    rep.eta = (initial_box - rep.ultimate).cwiseMax(0.0);
    return rep;
}

struct FixedPointOptions {
    double tol = 1e-10;       // componentwise relative
    double abs_floor = 1e-14; // absolute floor on the relative denominator
    int max_iter = 100000;
};

struct BetaResult {
    enum class Status { Converged, Diverged, Degenerate };
    Status status = Status::Diverged;
    Vec beta;
    Vec T0_beta;
    int iterations = 0;
};

/// Iterate x <- -Lambda^{-1} delta(x) + alpha from 0. For CNI delta the
/// iterates increase monotonically; a finite limit beta satisfies
/// T_alpha(beta) = beta, hence T_0(beta) = beta - alpha < beta strictly.
inline BetaResult find_beta(const TransformCandidate& candidate,
                            const DeltaFn& delta, const Vec& alpha,
                            const FixedPointOptions& opt = {}) {
    if (alpha.minCoeff() <= 0.0)
        throw std::invalid_argument("find_beta: alpha must be strictly positive");
    const auto check = metzler_hurwitz_check(candidate.Lambda);
    if (!check.is_hurwitz)
        throw std::invalid_argument("find_beta: Lambda is not Hurwitz");
    const Mat& negLinv = *check.neg_inverse;
    const double cap = 1e9 * (1.0 + alpha.lpNorm<Eigen::Infinity>());

    BetaResult res;
    Vec x = Vec::Zero(alpha.size());
    for (int it = 0; it < opt.max_iter; ++it) {
        const Vec next = negLinv * delta(x) + alpha;
        res.iterations = it + 1;
        if (next.lpNorm<Eigen::Infinity>() > cap) {
            res.status = BetaResult::Status::Diverged;
            return res;
        }
        bool done = true;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double denom = std::max(std::abs(next(j)), opt.abs_floor);
            if (std::abs(next(j) - x(j)) > opt.tol * denom) { done = false; break; }
        }
        x = next;
        if (done) {
            res.beta = x;
            res.T0_beta = negLinv * delta(x);
            const bool strict = ((res.T0_beta.array() < res.beta.array()).all());
            res.status = strict ? BetaResult::Status::Converged
                                : BetaResult::Status::Degenerate;
            return res;
        }
    }
    res.status = BetaResult::Status::Diverged;
    return res;
}

/// Limit of T_0^k(start) with T_0(x) = -Lambda^{-1} delta(x); requires
/// T_0(start) <= start, which makes the sequence componentwise nonincreasing
/// for CNI delta. A violation along the way indicates a non-CNI delta.
inline Vec iterate_T0(const TransformCandidate& candidate, const DeltaFn& delta,
                      const Vec& start, const FixedPointOptions& opt = {}) {
    const auto check = metzler_hurwitz_check(candidate.Lambda);
    if (!check.is_hurwitz)
        throw std::invalid_argument("iterate_T0: Lambda is not Hurwitz");
    const Mat& negLinv = *check.neg_inverse;

    Vec x = start;
    {
        const Vec first = negLinv * delta(x);
        if (((first - x).array() > 1e-9 * (1.0 + x.array().abs())).any())
            throw std::invalid_argument("iterate_T0: T0(start) must not exceed start");
    }
    for (int it = 0; it < opt.max_iter; ++it) {
        const Vec next = negLinv * delta(x);
        if (((next - x).array() > 1e-9 * (1.0 + x.array().abs())).any())
            throw std::runtime_error(
                "iterate_T0: nonincreasing sequence violated at step " +
                std::to_string(it) + " (delta not CNI?)");
        bool done = true;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double denom = std::max(std::abs(next(j)), opt.abs_floor);
            if (std::abs(next(j) - x(j)) > opt.tol * denom) { done = false; break; }
        }
        x = next;
        if (done) return x;
    }
    throw std::runtime_error("iterate_T0: no convergence within max_iter");
}

/// Margin certificate for admissible transient offsets gamma = eps * c:
/// p_c = max(-Lambda c, 0), eps_bar = min_j (beta - T0(beta))_j /
/// (-Lambda^{-1} p_c)_j. Any eps in (0, eps_bar) keeps
/// -Lambda^{-1}[delta(beta) + max(-Lambda gamma, 0)] strictly inside beta.
struct GammaMargin {
    Vec p_c;
    double eps_bar = 0.0;
    Vec gamma;           // c * eps_bar * (1 - slack), strictly admissible
    Vec admissible_init; // T_gamma(beta)
};

inline GammaMargin gamma_margin(const TransformCandidate& candidate,
                                const DeltaFn& delta, const Vec& beta,
                                const Vec& c, double ulp_slack = 1e-3) {
    if (c.minCoeff() <= 0.0)
        throw std::invalid_argument("gamma_margin: c must be strictly positive");
    const auto check = metzler_hurwitz_check(candidate.Lambda);
    if (!check.is_hurwitz)
        throw std::invalid_argument("gamma_margin: Lambda is not Hurwitz");
    const Mat& negLinv = *check.neg_inverse;

    const Vec T0_beta = negLinv * delta(beta);
    if (!((T0_beta.array() < beta.array()).all()))
        throw std::invalid_argument("gamma_margin: T0(beta) must be strictly below beta");

    GammaMargin out;
    out.p_c = (-(candidate.Lambda * c)).cwiseMax(0.0);
    const Vec denom = negLinv * out.p_c;
    const Vec numer = beta - T0_beta;
    out.eps_bar = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < denom.size(); ++j)
        if (denom(j) > 0.0) out.eps_bar = std::min(out.eps_bar, numer(j) / denom(j));
    if (!std::isfinite(out.eps_bar))
        throw std::runtime_error("gamma_margin: p(c) vanished (degenerate Lambda row)");

    const double eps = out.eps_bar * (1.0 - ulp_slack);
    out.gamma = eps * c;
    out.admissible_init = T0_beta + out.gamma;

    const Vec p_gamma = (-(candidate.Lambda * out.gamma)).cwiseMax(0.0);
    const Vec lhs = negLinv * (delta(beta) + p_gamma);
    if (!((lhs.array() < beta.array()).all()))
        throw std::runtime_error("gamma_margin: post-hoc admissibility check failed");
    return out;
}

/// Any-epsilon invariance probe around an ultimate bound b: for shrinking
/// epsilon boxes, look for beta_eps in [b, b + eps] with T0(beta_eps)
/// strictly below beta_eps. An affine contraction (rho(R) < 1) passes
/// constructively via beta_eps = b + s (I - R)^{-1} 1.
struct InvarianceVerdict {
    bool pass = true;
    bool constructive = false;     // affine shortcut used
    int failed_probe = -1;         // 1-based probe index on failure
    std::vector<Vec> witnesses;    // beta_eps per probe on success
};

inline InvarianceVerdict invariance_check(const TransformCandidate& candidate,
                                          const DeltaFn& delta, const Vec& b,
                                          int probes = 8,
                                          const std::optional<Mat>& R = {}) {
    const auto check = metzler_hurwitz_check(candidate.Lambda);
    if (!check.is_hurwitz)
        throw std::invalid_argument("invariance_check: Lambda is not Hurwitz");
    const Mat& negLinv = *check.neg_inverse;
    const Eigen::Index n = b.size();

    InvarianceVerdict v;
    if (R && spectral_radius(*R) < 1.0) {
        const Mat I = Mat::Identity(n, n);
        const Vec x = (I - *R).partialPivLu().solve(Vec::Ones(n));
        for (int j = 1; j <= probes; ++j) {
            const double eps = std::pow(0.5, j);
            const double s = eps / (2.0 * x.maxCoeff());
            v.witnesses.push_back(b + s * x);
        }
        v.constructive = true;
        return v;
    }

    // Perron direction of -Lambda^{-1} (power iteration): the slowest
    // contraction axis, a natural offset direction for the probe.
    Vec perron = Vec::Ones(n);
    for (int it = 0; it < 200; ++it) {
        Vec next = negLinv * perron;
        const double nn = next.lpNorm<Eigen::Infinity>();
        if (nn == 0.0) break;
        next /= nn;
        if ((next - perron).lpNorm<Eigen::Infinity>() < 1e-12) { perron = next; break; }
        perron = next;
    }
    perron = perron.cwiseMax(1e-6);

    // Local linearization of x -> -Lambda^{-1} delta(x) at b: if the map is
    // locally contractive, offsetting along (I - R_num)^{-1} 1 gives a point
    // whose image drops by a uniform margin in every component.
    std::optional<Vec> lin_dir;
    {
        const double h = 1e-6 * std::max(1.0, b.lpNorm<Eigen::Infinity>());
        const Vec t0b = negLinv * delta(b);
        Mat Rnum(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Vec bp = b;
            bp(j) += h;
            Rnum.col(j) = (negLinv * delta(bp) - t0b) / h;
        }
        if (spectral_radius(Rnum) < 1.0) {
            const Vec x =
                (Mat::Identity(n, n) - Rnum).partialPivLu().solve(Vec::Ones(n));
            if ((x.array() > 0).all()) lin_dir = x;
        }
    }

    for (int j = 1; j <= probes; ++j) {
        const double eps = std::pow(0.5, j);
        bool found = false;
        std::vector<Vec> trial;
        if (lin_dir)
            trial.push_back(b + (eps / lin_dir->maxCoeff()) * 0.9 * (*lin_dir));
        trial.push_back(b.array() + eps / 2.0);
        trial.push_back(b.array() + eps * 0.9);
        trial.push_back(b + (eps / perron.maxCoeff()) * 0.9 * perron);
        for (double frac : {0.25, 0.1}) trial.push_back(b.array() + eps * frac);
        for (const Vec& cand : trial) {
            const Vec t0 = negLinv * delta(cand);
            if ((t0.array() < cand.array()).all()) {
                v.witnesses.push_back(cand);
                found = true;
                break;
            }
        }
        if (!found) {
            v.pass = false;
            v.failed_probe = j;
            return v;
        }
    }
    return v;
}

/// Global affine ultimate-bound artifact in the transformed coordinates,
/// after lifting per-mode caps through V.
struct AffineBoundReport {
    Mat F_bar;                    // max_i |V^{-1} H_i| F_i |V|
    Vec w_bar;                    // max_i |V^{-1} H_i| w_i
    Mat R;                        // -Lambda^{-1} F_bar
    double rho_R = 0.0;
    double abscissa_Lambda_F = 0.0; // spectral abscissa of Lambda + F_bar
    bool stable = false;            // rho(R) < 1, equivalently the abscissa < 0
    Vec b_tilde;                    // (I - R)^{-1} (-Lambda^{-1}) w_bar
    std::optional<Vec> b_refined;   // limit of T0 from b_tilde under a tighter delta
};

inline AffineBoundReport affine_pipeline(
    const TransformCandidate& candidate, const std::vector<AffineCap>& caps,
    const SwitchingSystem& system, const std::optional<DeltaFn>& refine_delta = {},
    const FixedPointOptions& opt = {}) {
    if (caps.size() != system.modes.size())
        throw std::invalid_argument("affine_pipeline: one cap per mode required");
    const auto check = metzler_hurwitz_check(candidate.Lambda);
    if (!check.is_hurwitz)
        throw std::invalid_argument("affine_pipeline: Lambda is not Hurwitz");
    const Mat& negLinv = *check.neg_inverse;
    const Eigen::Index n = candidate.Lambda.rows();
    const Mat aV = candidate.abs_V();

    AffineBoundReport rep;
    rep.F_bar = Mat::Zero(n, n);
    rep.w_bar = Vec::Zero(n);
    for (std::size_t i = 0; i < caps.size(); ++i) {
        const Mat aViH =
            (candidate.V_inverse * system.modes[i].H.cast<std::complex<double>>())
                .cwiseAbs();
        rep.F_bar = rep.F_bar.cwiseMax(aViH * caps[i].F * aV);
        rep.w_bar = rep.w_bar.cwiseMax(aViH * caps[i].w);
    }
    rep.R = negLinv * rep.F_bar;
    rep.rho_R = spectral_radius(rep.R);
    rep.abscissa_Lambda_F = spectral_abscissa(Mat(candidate.Lambda + rep.F_bar));
    rep.stable = rep.rho_R < 1.0;
    if (rep.stable != (rep.abscissa_Lambda_F < 0.0) &&
        std::abs(rep.rho_R - 1.0) > 1e-9 && std::abs(rep.abscissa_Lambda_F) > 1e-9)
        throw std::runtime_error(
            "affine_pipeline: rho(R) and abscissa(Lambda + F) disagree");
    if (!rep.stable) return rep;

    const Mat I = Mat::Identity(n, n);
    rep.b_tilde = (I - rep.R).partialPivLu().solve(negLinv * rep.w_bar);
    if (refine_delta)
        rep.b_refined = iterate_T0(candidate, *refine_delta, rep.b_tilde, opt);
    return rep;
}

/// Semi-global bound for an affine-capped delta: given the worst initial
/// history box xi (in transformed coordinates), build beta = alpha x with
/// x = (I - R)^{-1} 1 and alpha large enough that R beta - Lambda^{-1} w_bar
/// + v is strictly inside beta, where v = -Lambda^{-1} max(-Lambda xi, 0).
struct SemiglobalBound {
    Vec beta;
    Vec gamma; // = xi
    Vec b;     // limit of T0 from beta
};

inline SemiglobalBound semiglobal_bound(const TransformCandidate& candidate,
                                        const AffineBoundReport& affine,
                                        const DeltaFn& delta, const Vec& xi,
                                        const FixedPointOptions& opt = {}) {
    if (!affine.stable)
        throw std::invalid_argument("semiglobal_bound: requires rho(R) < 1");
    if (xi.size() && xi.minCoeff() < 0.0)
        throw std::invalid_argument("semiglobal_bound: xi must be nonnegative");
    const auto check = metzler_hurwitz_check(candidate.Lambda);
    const Mat& negLinv = *check.neg_inverse;
    const Eigen::Index n = candidate.Lambda.rows();
    const Mat I = Mat::Identity(n, n);

    const Vec v = negLinv * ((-(candidate.Lambda * xi)).cwiseMax(0.0));
    const Vec x = (I - affine.R).partialPivLu().solve(Vec::Ones(n));
    const Vec gap = x - affine.R * x; // == 1 entrywise by construction
    const Vec offset = negLinv * affine.w_bar + v;
    double alpha = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        alpha = std::max(alpha, offset(j) / gap(j));
        if (xi.size()) alpha = std::max(alpha, xi(j) / x(j));
    }
    alpha *= 1.05; // headroom keeps the strict inequality robust
    if (alpha <= 0.0) alpha = 1.0;

    SemiglobalBound out;
    out.beta = alpha * x;
    out.gamma = xi;
    const Vec lhs = affine.R * out.beta + negLinv * affine.w_bar + v;
    if (!((lhs.array() < out.beta.array()).all()))
        throw std::runtime_error("semiglobal_bound: containment check failed");
    out.b = iterate_T0(candidate, delta, out.beta, opt);
    return out;
}

/// Componentwise box mapped back to the original coordinates: |x| <= |V| r
/// whenever |V^{-1} x| <= r.
struct BoxBound {
    enum class Coords { Transformed, Original };
    Coords coords = Coords::Transformed;
    Vec radii;
};

inline BoxBound to_original_box(const CMat& V, const Vec& radii) {
    if (radii.size() && radii.minCoeff() < 0.0)
        throw std::invalid_argument("to_original_box: radii must be nonnegative");
    BoxBound out;
    out.coords = BoxBound::Coords::Original;
    out.radii = V.cwiseAbs() * radii;
    return out;
}

/// Full nonlinear-pipeline artifact (beta, ultimate bound, transient margin).
struct NonlinearBoundReport {
    Vec beta;
    Vec T0_beta;
    Vec b;
    Vec gamma;
    Vec p_c;
    double eps_bar = 0.0;
    Vec admissible_init;
};

inline NonlinearBoundReport nonlinear_pipeline(const TransformCandidate& candidate,
                                               const DeltaFn& delta,
                                               const Vec& alpha, const Vec& c,
                                               const FixedPointOptions& opt = {}) {
    const auto beta = find_beta(candidate, delta, alpha, opt);
    if (beta.status == BetaResult::Status::Diverged)
        throw std::runtime_error("nonlinear_pipeline: beta iteration diverged");
    if (beta.status == BetaResult::Status::Degenerate)
        throw std::runtime_error(
            "nonlinear_pipeline: beta converged without strict T0(beta) < beta");
    NonlinearBoundReport rep;
    rep.beta = beta.beta;
    rep.T0_beta = beta.T0_beta;
    rep.b = iterate_T0(candidate, delta, beta.beta, opt);
    const auto gm = gamma_margin(candidate, delta, beta.beta, c);
    rep.gamma = gm.gamma;
    rep.p_c = gm.p_c;
    rep.eps_bar = gm.eps_bar;
    rep.admissible_init = gm.admissible_init;
    return rep;
}

} // namespace cwb
