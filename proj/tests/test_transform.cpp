#include <catch2/catch_amalgamated.hpp>

#include "cwbounds/examples_data.hpp"
#include "cwbounds/rng.hpp"
#include "cwbounds/transform.hpp"

using namespace cwb;

TEST_CASE("assemble_transform with identity V returns metzlerized modes") {
    const auto sys = examples::worked_system();
    const auto c = assemble_transform(CMat::Identity(3, 3), sys);
    for (std::size_t i = 0; i < sys.modes.size(); ++i)
        CHECK((c.mode_transformed[i].real() - sys.modes[i].A).cwiseAbs().maxCoeff()
              < 1e-12);
    CHECK(is_metzler(c.Lambda));
    CHECK(c.condition_V == Catch::Approx(1.0));
}

TEST_CASE("assemble_transform reproduces both published mode-comparison "
          "matrices") {
    const auto sys = examples::worked_system();

    const auto plain = assemble_transform(examples::worked_V_plain(), sys);
    const Mat gp = examples::golden_Lambda_plain();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(plain.Lambda(i, j) - gp(i, j)) <=
                  std::max(1e-2, 0.01 * std::abs(gp(i, j))));
    CHECK(plain.objective < 0.0);

    const auto affine = assemble_transform(examples::worked_V_affine(), sys);
    const Mat ga = examples::golden_Lambda_affine();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(affine.Lambda(i, j) - ga(i, j)) <=
                  std::max(1e-2, 0.01 * std::abs(ga(i, j))));
}

TEST_CASE("assemble_transform rejects ill-conditioned V") {
    const auto sys = examples::worked_system();
    CMat V = CMat::Identity(3, 3);
    V(2, 2) = 1e-14;
    CHECK_THROWS_AS(assemble_transform(V, sys), std::invalid_argument);
}

TEST_CASE("search finds a feasible transform for the borderline pair") {
    const auto [A1, A2] = verge_example(examples::verge_a());
    SwitchingSystem sys;
    sys.n = 2;
    sys.tau_bar = 0.0;
    for (const Mat& A : {A1, A2}) {
        SwitchingSystem::Mode m;
        m.A = A;
        m.H = Mat::Zero(2, 1);
        m.bound = PerturbationBound::constant(Vec::Zero(1));
        sys.modes.push_back(m);
    }
    SearchConfig cfg;
    cfg.restarts = 40;
    cfg.seed = 5;
    const auto res = search_v(sys, cfg);
    CHECK(res.feasible);
    CHECK(res.best.objective < 0.0);
    CHECK_FALSE(res.log.empty());

    // The published transform certifies the same pair.
    const auto pub = assemble_transform(examples::verge_V(), sys);
    CHECK(pub.objective < 0.0);
}

TEST_CASE("search is deterministic for a fixed seed") {
    const auto [A1, A2] = verge_example(3.0);
    SwitchingSystem sys;
    sys.n = 2;
    for (const Mat& A : {A1, A2}) {
        SwitchingSystem::Mode m;
        m.A = A;
        m.H = Mat::Zero(2, 1);
        m.bound = PerturbationBound::constant(Vec::Zero(1));
        sys.modes.push_back(m);
    }
    SearchConfig cfg;
    cfg.restarts = 6;
    cfg.max_evals = 500;
    cfg.seed = 123;
    const auto a = search_v(sys, cfg);
    const auto b = search_v(sys, cfg);
    CHECK((a.best.V - b.best.V).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.best.objective == b.best.objective);
    CHECK(a.log.size() == b.log.size());
}

TEST_CASE("search reports infeasibility when no transform can work") {
    const auto sys = examples::no_transform_system();
    SearchConfig cfg;
    cfg.restarts = 30;
    cfg.max_evals = 1500;
    cfg.seed = 7;
    const auto res = search_v(sys, cfg);
    CHECK_FALSE(res.feasible);
    CHECK(res.best.objective >= 0.0);
}

TEST_CASE("affine-objective search folds the lifted cap into the objective") {
    const auto sys = examples::worked_system();
    SearchConfig cfg;
    cfg.mode = SearchConfig::Objective::Affine;
    cfg.restarts = 25;
    cfg.max_evals = 2500;
    cfg.seed = 11;
    const auto res = search_v(sys, cfg);
    CHECK(res.feasible);
    // The reported objective must equal the abscissa of Lambda + Fbar(V),
    // recomputed independently from the found V.
    const auto c = assemble_transform(res.best.V, sys);
    Mat F = Mat::Zero(3, 3);
    const Mat aV = c.abs_V();
    for (const auto& m : sys.modes) {
        const auto cap = cap_of(m.bound, 3);
        F = F.cwiseMax(
            Mat((c.V_inverse * m.H.cast<std::complex<double>>()).cwiseAbs() *
                cap.F * aV));
    }
    CHECK(res.best.objective ==
          Catch::Approx(spectral_abscissa(Mat(c.Lambda + F))).margin(1e-9));
}
