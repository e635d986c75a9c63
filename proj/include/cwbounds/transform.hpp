#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cwbounds/matrix.hpp"
#include "cwbounds/nelder_mead.hpp"
#include "cwbounds/rng.hpp"
#include "cwbounds/system.hpp"

namespace cwb {

/// Mode-comparison transform: Lambda_i = V^{-1} A_i V, M_i = metzlerize(Lambda_i),
/// Lambda = entrywise max of the M_i. All downstream bounds live in the
/// |V^{-1} x| coordinates this induces.
struct TransformCandidate {
    CMat V;
    CMat V_inverse;
    std::vector<CMat> mode_transformed; // Lambda_i
    std::vector<Mat> mode_metzlerized;  // M_i
    Mat Lambda;                         // entrywise max over modes
    double objective = 0.0;             // spectral abscissa of Lambda (or Lambda + Fbar)
    double condition_V = 0.0;

    Mat abs_V() const { return V.cwiseAbs(); }
};

struct SearchConfig {
    enum class Objective { Plain, Affine };

    int restarts = 50;
    int max_evals = 2000;
    std::uint64_t seed = 0;
    double entry_bound = 10.0; // cap on |Re|, |Im| of V entries at start
    Objective mode = Objective::Plain;

    void validate() const {
        if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
        if (entry_bound <= 0.0) throw std::invalid_argument("entry_bound must be > 0");
    }
};

struct RestartLog {
    int restart = 0;
    std::string start_kind;
    int evals = 0;
    double best_objective = 0.0;
    bool ill_conditioned = false;
};

struct SearchResult {
    TransformCandidate best;
    bool feasible = false; // objective < 0
    std::vector<RestartLog> log;
};

inline TransformCandidate assemble_transform(const CMat& V,
                                             const SwitchingSystem& system,
                                             const std::optional<Mat>& Fbar = {}) {
    TransformCandidate c;
    c.V = V;
    c.condition_V = condition_number(V);
    if (!(c.condition_V < 1e10))
        throw std::invalid_argument("assemble_transform: V is ill-conditioned");
    c.V_inverse = V.inverse();
    for (const auto& mode : system.modes) {
        CMat Li = c.V_inverse * mode.A.cast<std::complex<double>>() * V;
        c.mode_metzlerized.push_back(metzlerize(Li));
        c.mode_transformed.push_back(std::move(Li));
    }
    c.Lambda = c.mode_metzlerized.front();
    for (std::size_t i = 1; i < c.mode_metzlerized.size(); ++i)
        c.Lambda = c.Lambda.cwiseMax(c.mode_metzlerized[i]);
    c.objective = Fbar ? spectral_abscissa(Mat(c.Lambda + *Fbar))
                       : spectral_abscissa(c.Lambda);
    return c;
}

namespace detail {

inline CMat params_to_matrix(const Eigen::VectorXd& p, int n, bool real_only) {
    CMat V(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int k = i * n + j;
            const double re = p(k);
            const double im = real_only ? 0.0 : p(n * n + k);
            V(i, j) = {re, im};
        }
    return V;
}

inline Eigen::VectorXd matrix_to_params(const CMat& V, bool real_only) {
    const int n = static_cast<int>(V.rows());
    Eigen::VectorXd p(real_only ? n * n : 2 * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            p(i * n + j) = V(i, j).real();
            if (!real_only) p(n * n + i * n + j) = V(i, j).imag();
        }
    return p;
}

} // namespace detail

/// Multi-restart Nelder-Mead over the real/imaginary entries of V. Start
/// points: identity, each mode's eigenvector basis, one real-only random
/// restart, and random boxes at the configured entry bound. Deterministic for
/// a fixed seed; per-restart streams are derived from seed + restart index.
inline SearchResult search_v(const SwitchingSystem& system, const SearchConfig& config) {
    config.validate();
    system.validate();
    const int n = system.n;
    const int nmodes = static_cast<int>(system.modes.size());

    // Affine objective needs Fbar(V); it depends on V, so it is rebuilt per
    // evaluation from the per-mode declared caps.
    std::vector<AffineCap> caps;
    if (config.mode == SearchConfig::Objective::Affine)
        for (const auto& m : system.modes) caps.push_back(cap_of(m.bound, n));

    auto lifted_Fbar = [&](const TransformCandidate& c) -> Mat {
        const Mat aV = c.abs_V();
        Mat F = Mat::Zero(n, n);
        for (int i = 0; i < nmodes; ++i) {
            const Mat aViH = (c.V_inverse * system.modes[i].H.cast<std::complex<double>>())
                                 .cwiseAbs();
            F = F.cwiseMax(aViH * caps[i].F * aV);
        }
        return F;
    };

    auto evaluate = [&](const Eigen::VectorXd& p, bool real_only) -> double {
        const CMat V = detail::params_to_matrix(p, n, real_only);
        const double cond = condition_number(V);
        if (!(cond < 1e10) || !V.allFinite()) return 1e6;
        TransformCandidate c;
        try {
            c = assemble_transform(V, system);
        } catch (const std::exception&) {
            return 1e6;
        }
        double obj = c.objective;
        if (config.mode == SearchConfig::Objective::Affine)
            obj = spectral_abscissa(Mat(c.Lambda + lifted_Fbar(c)));
        if (cond > 1e6) obj += 1e-6 * std::log10(cond / 1e6) * 10.0;
        return obj;
    };

    SearchResult result;
    double best_val = std::numeric_limits<double>::infinity();
    std::optional<CMat> best_V;

    for (int r = 0; r < config.restarts; ++r) {
        RestartLog log;
        log.restart = r;
        bool real_only = false;
        CMat start;
        if (r == 0) {
            start = CMat::Identity(n, n);
            log.start_kind = "identity";
        } else if (r <= nmodes) {
            Eigen::EigenSolver<Mat> es(system.modes[r - 1].A);
            start = es.eigenvectors();
            log.start_kind = "mode_eigenbasis_" + std::to_string(r - 1);
            if (!(condition_number(start) < 1e8)) start = CMat::Identity(n, n);
        } else if (r == nmodes + 1) {
            real_only = true;
            Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(r));
            Mat R(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    R(i, j) = rng.uniform(-config.entry_bound, config.entry_bound);
            start = R.cast<std::complex<double>>();
            log.start_kind = "random_real";
        } else {
            Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(r));
            start = CMat(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double re = rng.uniform(-config.entry_bound, config.entry_bound);
                    const double im = rng.uniform(-config.entry_bound, config.entry_bound);
                    start(i, j) = {re, im};
                }
            log.start_kind = "random_complex";
        }

        NelderMeadOptions opt;
        opt.max_evals = config.max_evals;
        opt.initial_step = 0.25 * config.entry_bound;
        opt.target = -1e-6; // a strictly negative abscissa is all we need
        auto fn = [&](const Eigen::VectorXd& p) { return evaluate(p, real_only); };
        const auto nm = nelder_mead(fn, detail::matrix_to_params(start, real_only), opt);

        log.evals = nm.evals;
        log.best_objective = nm.fval;
        log.ill_conditioned = nm.fval >= 1e6;
        result.log.push_back(log);

        if (nm.fval < best_val && !log.ill_conditioned) {
            best_val = nm.fval;
            best_V = detail::params_to_matrix(nm.x, n, real_only);
        }
        if (nm.hit_target) break;
    }

    if (!best_V)
        throw std::runtime_error("search_v: every restart produced an "
                                 "ill-conditioned transform");
    std::optional<Mat> Fb;
    if (config.mode == SearchConfig::Objective::Affine) {
        TransformCandidate tmp = assemble_transform(*best_V, system);
        Fb = lifted_Fbar(tmp);
    }
    result.best = assemble_transform(*best_V, system, Fb);
    result.feasible = result.best.objective < 0.0;
    return result;
}

/// Two-mode pair sharing the eigenvalues -1 +- i but with eigenvector bases
/// that drift apart as `a` grows; no common quadratic Lyapunov function exists
/// for a > 3 + sqrt(8).
inline std::pair<Mat, Mat> verge_example(double a) {
    if (a == 0.0) throw std::invalid_argument("verge_example: a must be nonzero");
    Mat A1(2, 2), A2(2, 2);
    A1 << -1, -1, 1, -1;
    A2 << -1, -a, 1.0 / a, -1;
    return {A1, A2};
}

} // namespace cwb
