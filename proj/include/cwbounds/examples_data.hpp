#pragma once

#include "cwbounds/matrix.hpp"
#include "cwbounds/system.hpp"
#include "cwbounds/transform.hpp"

namespace cwb::examples {

/// Three-state, two-mode switching system with delay-dependent perturbation
/// bounds; the worked example threaded through the whole toolchain.
inline SwitchingSystem worked_system() {
    SwitchingSystem sys;
    sys.n = 3;
    sys.tau_bar = 0.1;

    SwitchingSystem::Mode m1;
    m1.A = Mat(3, 3);
    m1.A << -6.91, 1.92, 4.4,
             1.32, -1.54, -1.41,
             4.47, -3.02, -5.43;
    m1.H = Mat(3, 1);
    m1.H << 0, 0.02, 0;
    m1.bound = PerturbationBound::expression(
        {BoundExpr::parse("clamp(sin(t3), 0, 1, pi/2)")});
    {
        Mat F(1, 3);
        F << 0, 0, 1;
        Vec w(1);
        w << 0;
        m1.bound.declared_cap = AffineCap{F, w};
    }

    SwitchingSystem::Mode m2;
    m2.A = Mat(3, 3);
    m2.A << -9.27, -0.19, 7.15,
             2.02, -1.38, -1.94,
             6.84, -4.28, -6.64;
    m2.H = Mat(3, 2);
    m2.H << 0.01, -0.05,
            0.01, 0.0,
            0.02, 0.03;
    m2.bound = PerturbationBound::expression(
        {BoundExpr::parse(
             "piecewise(t1 - 1/2, t1*exp(-2*t1) + 1, exp(-1)/2 + 1)"),
         BoundExpr::parse("5*t3 + 1")});
    {
        Mat F(2, 3);
        F << 1, 0, 0,
             0, 0, 5;
        Vec w(2);
        w << 1, 1;
        m2.bound.declared_cap = AffineCap{F, w};
    }

    sys.modes = {std::move(m1), std::move(m2)};
    sys.validate();
    return sys;
}

/// Transform minimizing the abscissa of Lambda alone (nonlinear pipeline).
inline CMat worked_V_plain() {
    Mat re(3, 3), im(3, 3);
    re << 2.408, 1.745, 0.162,
         -0.634, -1.363, 0.0351,
         -2.144, 2.217, 0.118;
    im << 0.443, 2.059, 1.558,
         -0.117, -1.815, 0.494,
         -0.399, 3.247, 1.652;
    return re.cast<std::complex<double>>() +
           std::complex<double>(0, 1) * im.cast<std::complex<double>>();
}

/// Transform minimizing the abscissa of Lambda + F_bar (affine pipeline).
inline CMat worked_V_affine() {
    Mat re(3, 3), im(3, 3);
    re << 2.244, -2.715, 0,
          0.706, 0.715, -4.302,
          2.359, 2.418, 1.674;
    im << -4.401, 2.891, 0,
          -1.385, -0.761, -3.789,
          -4.625, -2.575, 1.470;
    return re.cast<std::complex<double>>() +
           std::complex<double>(0, 1) * im.cast<std::complex<double>>();
}

// --- Published reference values for the worked example (print precision) ---

inline Mat golden_Lambda_plain() {
    Mat L(3, 3);
    L << -11.34, 1.145, 0.191,
          0.0067, -0.0979, 0.0038,
          0.0130, 1.912, -1.605;
    return L;
}

inline Mat golden_Lambda_affine() {
    Mat L(3, 3);
    L << -1.599, 0.001, 2.620,
          0.268, -11.34, 1.028,
          0.006, 0.004, -0.103;
    return L;
}

inline Mat golden_F_bar() {
    Mat F(3, 3);
    F << 0.0633, 0.0450, 0.0205,
         0.2749, 0.1879, 0.1150,
         0.0390, 0.0269, 0.0154;
    return F;
}

inline Vec golden_w_bar() { return Vec{{0.005, 0.0117, 0.002}}; }

inline Vec golden_beta() { return Vec{{4.235, 19.23, 26.82}}; }
inline Vec golden_T0_beta() { return Vec{{3.235, 18.23, 25.82}}; }
inline Vec golden_b_nonlinear() { return Vec{{0.127, 0.715, 1.017}}; }
inline Vec golden_Vb_nonlinear() { return Vec{{3.84, 2.21, 4.78}}; }
inline double golden_eps_bar() { return 0.8384; }
inline Vec golden_T_gamma_beta() { return Vec{{4.073, 19.068, 26.658}}; }

inline Vec golden_b_tilde() { return Vec{{0.903, 0.098, 0.521}}; }
inline Vec golden_Vb_tilde() { return Vec{{4.85, 4.49, 6.20}}; }
inline Vec golden_b_affine_refined() { return Vec{{0.365, 0.0403, 0.212}}; }
inline Vec golden_Vb_affine_refined() { return Vec{{1.96, 1.82, 2.51}}; }

/// CQLF for the bare switching part, obtained externally via LMIs; the level
/// search on it finds no invariant level once the perturbation enters.
inline Mat golden_P_lmi() {
    Mat P(3, 3);
    P << 0.1638, 0.1634, 0.012,
         0.1634, 1.9577, -0.3602,
         0.012, -0.3602, 0.2285;
    return P;
}

inline Vec golden_D_plain() { return Vec{{0.0411, 0.5584, 0.0800}}; }

inline Mat golden_P_from_plain() {
    Mat P(3, 3);
    P << 0.0088, 0.0134, 0.0017,
         0.0134, 0.0763, -0.0063,
         0.0017, -0.0063, 0.0074;
    return P;
}

inline Vec golden_D_affine() { return Vec{{0.1812, 0.5127, 9.962}}; }

inline Mat golden_P_from_affine() {
    Mat P(3, 3);
    P << 0.0111, -0.003, -0.0064,
        -0.003, 0.245, -0.0692,
        -0.0064, -0.0692, 0.0301;
    return P;
}

inline double golden_level_k() { return 0.0989; }
inline Vec golden_x_bar() { return Vec{{4.0448, 0.7926, 4.1443}}; }
inline Vec golden_combined_box() { return Vec{{1.96, 0.7926, 2.51}}; }

// --- Two-mode pair on the verge of losing a common quadratic certificate ---

inline double verge_a() { return 3.0 + std::sqrt(8.0) - 1e-3; }

inline CMat verge_V() {
    Mat re(2, 2), im(2, 2);
    re << -6.0069, 5.5729,
          -0.3554, -1.0843;
    im << 0.8605, -2.6151,
         -2.4885, -2.3081;
    return re.cast<std::complex<double>>() +
           std::complex<double>(0, 1) * im.cast<std::complex<double>>();
}

inline SwitchingSystem verge_system(double a) {
    auto [A1, A2] = verge_example(a);
    SwitchingSystem sys;
    sys.n = 2;
    for (const Mat& A : {A1, A2}) {
        SwitchingSystem::Mode m;
        m.A = A;
        m.H = Mat::Zero(2, 1);
        m.bound = PerturbationBound::constant(Vec::Zero(1));
        sys.modes.push_back(std::move(m));
    }
    sys.validate();
    return sys;
}

/// Three-mode system admitting a common quadratic Lyapunov function for
/// which no mode-comparison transform exists: the abscissa objective stays
/// nonnegative under any V.
inline SwitchingSystem no_transform_system() {
    SwitchingSystem sys;
    sys.n = 2;
    Mat A1(2, 2), A2(2, 2), A3(2, 2);
    A1 << 0, 5, -30, -1.4;
    A2 << 0, 5, -26, -1;
    A3 << -6, 27, -150, -1;
    for (const Mat& A : {A1, A2, A3}) {
        SwitchingSystem::Mode m;
        m.A = A;
        m.H = Mat::Zero(2, 1);
        m.bound = PerturbationBound::constant(Vec::Zero(1));
        sys.modes.push_back(std::move(m));
    }
    sys.validate();
    return sys;
}

} // namespace cwb::examples
