#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cwbounds/bounds.hpp"
#include "cwbounds/examples_data.hpp"
#include "cwbounds/lyapunov.hpp"
#include "cwbounds/matrix.hpp"
#include "cwbounds/system.hpp"
#include "cwbounds/transform.hpp"

namespace cwb {

struct ReproRow {
    std::string name;
    bool pass = false;
    std::string expected;
    std::string actual;
    std::string note; // non-empty for known, documented discrepancies
};

struct ReproReport {
    std::string example;
    std::vector<ReproRow> rows;

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(5) << v;
    return os.str();
}

inline std::string fmt(const Vec& v) {
    std::ostringstream os;
    os << std::setprecision(5) << "(";
    for (Eigen::Index j = 0; j < v.size(); ++j)
        os << (j ? ", " : "") << v(j);
    os << ")";
    return os.str();
}

inline ReproRow row_scalar(std::string name, double actual, double expected,
                           double rel_tol) {
    ReproRow r;
    r.name = std::move(name);
    r.expected = fmt(expected);
    r.actual = fmt(actual);
    r.pass = std::abs(actual - expected) <= rel_tol * std::abs(expected);
    return r;
}

inline ReproRow row_scalar_abs(std::string name, double actual, double expected,
                               double abs_tol) {
    ReproRow r;
    r.name = std::move(name);
    r.expected = fmt(expected);
    r.actual = fmt(actual);
    r.pass = std::abs(actual - expected) <= abs_tol;
    return r;
}

inline ReproRow row_vector(std::string name, const Vec& actual,
                           const Vec& expected, double rel_tol) {
    ReproRow r;
    r.name = std::move(name);
    r.expected = fmt(expected);
    r.actual = fmt(actual);
    r.pass = actual.size() == expected.size();
    for (Eigen::Index j = 0; r.pass && j < actual.size(); ++j)
        r.pass = std::abs(actual(j) - expected(j)) <=
                 rel_tol * std::abs(expected(j));
    return r;
}

inline ReproRow row_matrix(std::string name, const Mat& actual,
                           const Mat& expected, double abs_tol, double rel_tol) {
    ReproRow r;
    r.name = std::move(name);
    std::ostringstream oe, oa;
    oe << std::setprecision(4) << expected;
    oa << std::setprecision(4) << actual;
    r.expected = oe.str();
    r.actual = oa.str();
    r.pass = actual.rows() == expected.rows() && actual.cols() == expected.cols();
    for (Eigen::Index i = 0; r.pass && i < actual.rows(); ++i)
        for (Eigen::Index j = 0; r.pass && j < actual.cols(); ++j) {
            const double diff = std::abs(actual(i, j) - expected(i, j));
            r.pass = diff <= std::max(abs_tol, rel_tol * std::abs(expected(i, j)));
        }
    return r;
}

inline ReproRow row_flag(std::string name, bool actual, std::string describe) {
    ReproRow r;
    r.name = std::move(name);
    r.expected = describe;
    r.actual = actual ? "true" : "false";
    r.pass = actual;
    return r;
}

} // namespace detail

/// Nonlinear pipeline against the published worked-example values.
inline ReproReport reproduce_nonlinear() {
    using namespace detail;
    ReproReport rep;
    rep.example = "worked_nonlinear";

    const auto sys = examples::worked_system();
    const auto cand = assemble_transform(examples::worked_V_plain(), sys);

    rep.rows.push_back(row_matrix("Lambda", cand.Lambda,
                                  examples::golden_Lambda_plain(), 1e-2, 0.01));
    rep.rows.push_back(
        row_scalar_abs("abscissa(Lambda)", cand.objective, -0.0923, 0.005));

    const auto delta = make_psi(cand, sys);
    const auto nl = nonlinear_pipeline(cand, delta, Vec::Ones(3), Vec::Ones(3));

    rep.rows.push_back(row_vector("beta", nl.beta, examples::golden_beta(), 0.02));
    rep.rows.push_back(
        row_vector("T0(beta)", nl.T0_beta, examples::golden_T0_beta(), 0.02));
    rep.rows.push_back(
        row_vector("b", nl.b, examples::golden_b_nonlinear(), 0.02));
    rep.rows.push_back(row_vector("|V| b", to_original_box(cand.V, nl.b).radii,
                                  examples::golden_Vb_nonlinear(), 0.02));
    rep.rows.push_back(
        row_scalar("eps_bar", nl.eps_bar, examples::golden_eps_bar(), 0.02));
    // The published admissible-init row uses the example offset 0.838 * 1.
    const Vec t_gamma = nl.T0_beta.array() + 0.838;
    rep.rows.push_back(row_vector("T_gamma(beta) at eps=0.838", t_gamma,
                                  examples::golden_T_gamma_beta(), 0.02));
    return rep;
}

/// Affine pipeline against the published values. The fixed-point rows chain
/// from the published Lambda/F_bar/w_bar intermediates: rho(R) = 0.96
/// amplifies the 4-digit print rounding of V through (I - R)^{-1}, so
/// recomputing them from V alone cannot land within print precision. The
/// V-derived intermediates are themselves checked against the published
/// ones, which closes the chain.
inline ReproReport reproduce_affine() {
    using namespace detail;
    ReproReport rep;
    rep.example = "worked_affine";

    const auto sys = examples::worked_system();
    auto cand = assemble_transform(examples::worked_V_affine(), sys);

    rep.rows.push_back(row_matrix("Lambda", cand.Lambda,
                                  examples::golden_Lambda_affine(), 1e-2, 0.01));

    std::vector<AffineCap> caps;
    for (const auto& m : sys.modes) caps.push_back(cap_of(m.bound, sys.n));
    const auto aff = affine_pipeline(cand, caps, sys);

    rep.rows.push_back(row_matrix("F_bar", aff.F_bar, examples::golden_F_bar(),
                                  1e-4, 0.02));
    rep.rows.push_back(
        row_vector("w_bar", aff.w_bar, examples::golden_w_bar(), 0.02));
    rep.rows.push_back(row_flag("rho(R) < 1", aff.stable,
                                "spectral radius below one"));

    // Chained fixed-point rows from the published intermediates.
    TransformCandidate chained = cand;
    chained.Lambda = examples::golden_Lambda_affine();
    const auto chain_check = metzler_hurwitz_check(chained.Lambda);
    const Mat& negLinv = *chain_check.neg_inverse;
    const Mat R = negLinv * examples::golden_F_bar();
    const Vec b_tilde = (Mat::Identity(3, 3) - R)
                            .partialPivLu()
                            .solve(negLinv * examples::golden_w_bar());
    rep.rows.push_back(
        row_vector("b_tilde", b_tilde, examples::golden_b_tilde(), 0.02));
    rep.rows.push_back(row_vector("|V| b_tilde",
                                  to_original_box(cand.V, b_tilde).radii,
                                  examples::golden_Vb_tilde(), 0.02));

    const auto delta = make_psi(cand, sys);
    const Vec b = iterate_T0(chained, delta, b_tilde);
    rep.rows.push_back(
        row_vector("b refined", b, examples::golden_b_affine_refined(), 0.02));
    rep.rows.push_back(row_vector("|V| b refined",
                                  to_original_box(cand.V, b).radii,
                                  examples::golden_Vb_affine_refined(), 0.02));
    return rep;
}

/// Quadratic-certificate pipeline. The level search follows the exact
/// (nonlinear) perturbation bound inside the affine bracket; the published
/// level is reproduced within 10%. The published second-component extent is
/// not reproducible from the published P and k by the closed-form ellipsoid
/// extent (sqrt(k (P^{-1})_22) = 1.357, printed 0.7926); components 1 and 3
/// match the closed form to 0.4%, which pins P and k as correct. The
/// affected rows are kept and fail honestly.
inline ReproReport reproduce_lyapunov(std::uint64_t seed = 20240817) {
    using namespace detail;
    ReproReport rep;
    rep.example = "worked_lyapunov";

    auto sys = examples::worked_system();
    sys.tau_bar = 0.0; // quadratic-certificate results require no delay

    std::vector<Mat> modeA;
    for (const auto& m : sys.modes) modeA.push_back(m.A);
    {
        const auto margins = verify_cqlf(examples::golden_P_lmi(), modeA);
        bool ok = true;
        for (double m : margins) ok = ok && m < 1e-3;
        rep.rows.push_back(
            row_flag("supplied-P decrease margins < 1e-3", ok, "all modes"));
    }
    {
        LevelSearchOptions opt;
        opt.samples = 2000;
        opt.seed = seed;
        const auto lvl = level_search(examples::golden_P_lmi(), sys, opt);
        rep.rows.push_back(row_flag("level search infeasible for supplied P",
                                    !lvl.feasible, "no invariant level"));
    }
    {
        const Mat P = cqlf_from_diag(examples::worked_V_affine(),
                                     examples::golden_D_affine());
        rep.rows.push_back(row_matrix("P from diagonal certificate", P,
                                      examples::golden_P_from_affine(), 1e-3, 0.0));
    }

    LevelSearchOptions opt;
    opt.samples = 10000;
    opt.seed = seed;
    const auto lvl = level_search(examples::golden_P_from_affine(), sys, opt);
    rep.rows.push_back(
        row_flag("level search feasible", lvl.feasible, "invariant level found"));
    const double k = lvl.feasible ? lvl.k / (1.0 + lvl.margin) : 0.0;
    rep.rows.push_back(row_scalar("k", k, examples::golden_level_k(), 0.10));

    const Vec x_bar = component_extent(examples::golden_P_from_affine(),
                                       examples::golden_level_k());
    auto xbar_row =
        row_vector("x_bar", x_bar, examples::golden_x_bar(), 0.05);
    if (!xbar_row.pass)
        xbar_row.note = "second component: published value below the "
                        "closed-form ellipsoid extent for the published P, k";
    rep.rows.push_back(xbar_row);

    const Vec combined = combine_boxes(
        {examples::golden_Vb_affine_refined(), x_bar});
    auto comb_row = row_vector("combined box", combined,
                               examples::golden_combined_box(), 0.05);
    if (!comb_row.pass)
        comb_row.note = "inherits the second-component extent discrepancy";
    rep.rows.push_back(comb_row);
    return rep;
}

/// Two-mode pair at the verge of losing a common quadratic certificate: the
/// published transform still renders Lambda (numerically) Hurwitz.
inline ReproReport reproduce_verge() {
    using namespace detail;
    ReproReport rep;
    rep.example = "verge_pair";
    const auto sys = examples::verge_system(examples::verge_a());
    const auto cand = assemble_transform(examples::verge_V(), sys);
    ReproRow r;
    r.name = "abscissa(Lambda) < 0.02";
    r.expected = "< 0.02";
    r.actual = fmt(cand.objective);
    r.pass = cand.objective < 0.02;
    rep.rows.push_back(r);
    return rep;
}

/// Three-mode system with a common quadratic certificate but no useful
/// mode-comparison transform: the search objective stays nonnegative.
inline ReproReport reproduce_no_transform(int restarts = 100,
                                          std::uint64_t seed = 7) {
    using namespace detail;
    ReproReport rep;
    rep.example = "no_transform_triple";
    const auto sys = examples::no_transform_system();
    SearchConfig cfg;
    cfg.restarts = restarts;
    cfg.seed = seed;
    const auto res = search_v(sys, cfg);
    ReproRow r;
    r.name = "best objective >= 0";
    r.expected = ">= 0";
    r.actual = fmt(res.best.objective);
    r.pass = res.best.objective >= 0.0;
    rep.rows.push_back(r);
    return rep;
}

} // namespace cwb
