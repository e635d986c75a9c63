#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cwb {

using Mat  = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec  = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

/// Off-diagonal slack below which a matrix still counts as Metzler.
inline constexpr double kMetzlerTol = 1e-12;

/// Definiteness margins are compared against this absolute threshold.
inline constexpr double kDefiniteTol = 1e-12;

struct SpectralInfo {
    std::vector<std::complex<double>> eigenvalues;
    double abscissa = 0.0; // max real part
    double radius   = 0.0; // max modulus
};

struct MetzlerHurwitzResult {
    bool is_metzler = false;
    bool is_hurwitz = false;
    std::optional<Mat> neg_inverse; // -L^{-1}, present when Metzler and Hurwitz
};

struct DiagonalLyapunov {
    Vec d;                 // diagonal of D, all positive
    double margin = 0.0;   // largest eigenvalue of L'D + DL, negative on success
};

/// Real matrix keeping Re on the diagonal and |.| off it. The result has
/// nonnegative off-diagonal entries for any complex input.
inline Mat metzlerize(const CMat& N) {
    if (N.rows() != N.cols())
        throw std::invalid_argument("metzlerize: matrix must be square");
    Mat M = N.cwiseAbs();
    for (Eigen::Index j = 0; j < N.rows(); ++j) M(j, j) = N(j, j).real();
    return M;
}

inline bool is_metzler(const Mat& L, double tol = kMetzlerTol) {
    for (Eigen::Index i = 0; i < L.rows(); ++i)
        for (Eigen::Index j = 0; j < L.cols(); ++j)
            if (i != j && L(i, j) < -tol) return false;
    return true;
}

inline SpectralInfo spectral_info(const CMat& M) {
    if (M.rows() != M.cols())
        throw std::invalid_argument("spectral_info: matrix must be square");
    if (!M.allFinite())
        throw std::invalid_argument("spectral_info: matrix has non-finite entries");
    Eigen::ComplexEigenSolver<CMat> solver(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectral_info: eigensolver failed to converge");
    SpectralInfo out;
    out.abscissa = -std::numeric_limits<double>::infinity();
    out.radius = 0.0;
    for (Eigen::Index j = 0; j < M.rows(); ++j) {
        const std::complex<double> ev = solver.eigenvalues()(j);
        out.eigenvalues.push_back(ev);
        out.abscissa = std::max(out.abscissa, ev.real());
        out.radius   = std::max(out.radius, std::abs(ev));
    }
    return out;
}

inline SpectralInfo spectral_info(const Mat& M) {
    return spectral_info(CMat(M.cast<std::complex<double>>()));
}

inline double spectral_abscissa(const Mat& M) { return spectral_info(M).abscissa; }
inline double spectral_radius(const Mat& M)   { return spectral_info(M).radius; }

/// Scaling-and-squaring matrix exponential of L*t (Pade order 13 under the hood).
inline Mat matrix_exponential(const Mat& L, double t) {
    if (L.rows() != L.cols())
        throw std::invalid_argument("matrix_exponential: matrix must be square");
    if (t < 0.0)
        throw std::invalid_argument("matrix_exponential: t must be nonnegative");
    Mat E = (L * t).exp();
    if (!E.allFinite())
        throw std::runtime_error("matrix_exponential: overflow");
    return E;
}

/// Metzler/Hurwitz classification; for a Metzler Hurwitz matrix also returns
/// -L^{-1}, which is entrywise nonnegative (-L is then an M-matrix).
inline MetzlerHurwitzResult metzler_hurwitz_check(const Mat& L,
                                                 double hurwitz_threshold = 0.0) {
    MetzlerHurwitzResult out;
    out.is_metzler = is_metzler(L);
    out.is_hurwitz = spectral_abscissa(L) < hurwitz_threshold;
    if (out.is_metzler && out.is_hurwitz) {
        Eigen::FullPivLU<Mat> lu(L);
        if (!lu.isInvertible())
            throw std::runtime_error("metzler_hurwitz_check: singular matrix");
        Mat neg_inv = -lu.inverse();
        if (neg_inv.minCoeff() < -1e-10)
            throw std::runtime_error(
                "metzler_hurwitz_check: -L^{-1} not entrywise nonnegative");
        out.neg_inverse = std::move(neg_inv);
    }
    return out;
}

inline double symmetric_max_eigenvalue(const Mat& S) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("symmetric eigensolve failed");
    return es.eigenvalues().maxCoeff();
}

inline double symmetric_min_eigenvalue(const Mat& S) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("symmetric eigensolve failed");
    return es.eigenvalues().minCoeff();
}

/// Diagonal D > 0 with L'D + DL < 0 for a Metzler Hurwitz L, built from the
/// quotient of the left and right "mass" vectors of the M-matrix -L:
/// v = -L^{-1} 1, u = -L'^{-1} 1, d_j = u_j / v_j. No LMI solver involved.
inline DiagonalLyapunov diagonal_lyapunov(const Mat& L) {
    auto check = metzler_hurwitz_check(L);
    if (!check.is_metzler)
        throw std::invalid_argument("diagonal_lyapunov: matrix is not Metzler");
    if (!check.is_hurwitz)
        throw std::invalid_argument("diagonal_lyapunov: matrix is not Hurwitz");

    const Eigen::Index n = L.rows();
    const Vec ones = Vec::Ones(n);
    auto build = [&](const Mat& Ls) -> Vec {
        const Vec v = -Ls.partialPivLu().solve(ones);
        const Vec u = -Ls.transpose().partialPivLu().solve(ones);
        return u.cwiseQuotient(v);
    };
    auto margin_of = [&](const Vec& d) {
        const Mat D = d.asDiagonal();
        return symmetric_max_eigenvalue(L.transpose() * D + D * L);
    };

    Vec d = build(L);
    double margin = (d.minCoeff() > 0.0)
                        ? margin_of(d)
                        : std::numeric_limits<double>::infinity();
    if (margin < -kDefiniteTol) return {d, margin};

    // Numerically borderline: rebuild from a diagonally shifted copy, bisecting
    // the shift down from |a(L)| until the margin against the original L clears.
    const double abscissa = spectral_abscissa(L);
    double shift = 0.5 * std::abs(abscissa);
    for (int iter = 0; iter < 60; ++iter) {
        const Mat Ls = L - shift * Mat::Identity(n, n);
        const Vec ds = build(Ls);
        if (ds.minCoeff() > 0.0) {
            const double m = margin_of(ds);
            if (m < -kDefiniteTol) return {ds, m};
        }
        shift *= 0.5;
    }
    throw std::runtime_error("diagonal_lyapunov: could not certify margin < 0");
}

/// P = Re{(V^{-1})^* D V^{-1}} for diagonal positive D; asserted symmetric
/// positive definite.
inline Mat cqlf_from_diag(const CMat& V, const Vec& d) {
    if (V.rows() != V.cols() || V.rows() != d.size())
        throw std::invalid_argument("cqlf_from_diag: dimension mismatch");
    if (d.minCoeff() <= 0.0)
        throw std::invalid_argument("cqlf_from_diag: D must be positive");
    Eigen::JacobiSVD<CMat> svd(V);
    const double cond =
        svd.singularValues()(0) / svd.singularValues()(V.rows() - 1);
    if (!(cond < 1e12))
        throw std::invalid_argument("cqlf_from_diag: V is near-singular");
    const CMat Vi = V.inverse();
    const CMat D = d.cast<std::complex<double>>().asDiagonal();
    Mat P = (Vi.adjoint() * D * Vi).real();
    P = 0.5 * (P + P.transpose());
    const double min_eig = symmetric_min_eigenvalue(P);
    if (min_eig <= 1e-10 * P.norm())
        throw std::runtime_error("cqlf_from_diag: P not positive definite");
    return P;
}

/// Largest eigenvalue of A_i'P + PA_i per mode; all must sit below `tol` for
/// P to certify a common quadratic Lyapunov function.
inline std::vector<double> verify_cqlf(const Mat& P, const std::vector<Mat>& modes) {
    std::vector<double> margins;
    margins.reserve(modes.size());
    for (const Mat& A : modes) {
        if (A.rows() != P.rows() || A.cols() != P.cols())
            throw std::invalid_argument("verify_cqlf: dimension mismatch");
        margins.push_back(symmetric_max_eigenvalue(A.transpose() * P + P * A));
    }
    return margins;
}

inline bool cqlf_passes(const std::vector<double>& margins, double tol = -kDefiniteTol) {
    for (double m : margins)
        if (!(m < tol)) return false;
    return true;
}

inline double condition_number(const CMat& V) {
    Eigen::JacobiSVD<CMat> svd(V);
    const double smin = svd.singularValues()(V.rows() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return svd.singularValues()(0) / smin;
}

} // namespace cwb
