#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "cwbounds/examples_data.hpp"
#include "cwbounds/json_io.hpp"
#include "cwbounds/rng.hpp"

using namespace cwb;

TEST_CASE("matrix serialization: row-major nesting, [re, im] pairs for "
          "complex entries") {
    Mat M(2, 3);
    M << 1, 2, 3, 4, 5, 6;
    const json j = matrix_to_json(M);
    CHECK(j.size() == 2);
    CHECK(j[0][2].get<double>() == 3.0);
    CHECK((matrix_from_json(j) - M).cwiseAbs().maxCoeff() == 0.0);

    CMat C(1, 2);
    C(0, 0) = {1.5, -2.5};
    C(0, 1) = {0.0, 1.0};
    const json jc = matrix_to_json(C);
    REQUIRE(jc[0][0].is_array());
    CHECK(jc[0][0][0].get<double>() == 1.5);
    CHECK(jc[0][0][1].get<double>() == -2.5);
    CHECK((cmatrix_from_json(jc) - C).cwiseAbs().maxCoeff() == 0.0);

    // A complex matrix with zero imaginary part serializes as bare numbers
    // and still parses back through the complex reader.
    const json jr = matrix_to_json(CMat(CMat::Identity(2, 2)));
    CHECK(jr[0][0].is_number());
    CHECK((cmatrix_from_json(jr) - CMat::Identity(2, 2)).cwiseAbs().maxCoeff()
          == 0.0);
}

TEST_CASE("matrix parsing rejects malformed payloads") {
    CHECK_THROWS_AS(cmatrix_from_json(json::array()), std::invalid_argument);
    CHECK_THROWS_AS(cmatrix_from_json(json::parse("[[1, 2], [3]]")),
                    std::invalid_argument);
    CHECK_THROWS_AS(cmatrix_from_json(json::parse("[[\"x\"]]")),
                    std::invalid_argument);
    CHECK_THROWS_AS(cmatrix_from_json(json::parse("[[[1, 2, 3]]]")),
                    std::invalid_argument);
    CHECK_THROWS_AS(matrix_from_json(json::parse("[[[1, 2]]]")),
                    std::invalid_argument);
}

TEST_CASE("bound round trips preserve evaluation for all three variants") {
    Rng rng(71);
    std::vector<PerturbationBound> bounds;
    bounds.push_back(PerturbationBound::constant(Vec{{0.4, 1.2}}));
    Mat F(1, 3);
    F << 0.0, 0.0, 5.0;
    bounds.push_back(PerturbationBound::affine_bound(F, Vec{{1.0}}));
    for (const auto& m : examples::worked_system().modes) bounds.push_back(m.bound);

    for (const auto& b : bounds) {
        const auto rt = bound_from_json(bound_to_json(b));
        CHECK(rt.kind == b.kind);
        CHECK(rt.output_dim() == b.output_dim());
        const Eigen::Index n = 3;
        for (int s = 0; s < 200; ++s) {
            Vec theta(n);
            for (Eigen::Index j = 0; j < n; ++j) theta(j) = rng.uniform(0.0, 4.0);
            CHECK((eval_bound(rt, theta) - eval_bound(b, theta))
                      .cwiseAbs()
                      .maxCoeff() < 1e-13);
        }
        if (b.declared_cap) {
            REQUIRE(rt.declared_cap);
            CHECK((rt.declared_cap->F - b.declared_cap->F).cwiseAbs().maxCoeff()
                  == 0.0);
        }
    }
    CHECK_THROWS_AS(bound_from_json(json::parse("{\"type\": \"mystery\"}")),
                    std::invalid_argument);
}

TEST_CASE("system round trip preserves structure and downstream analysis") {
    const auto sys = examples::worked_system();
    const auto rt = system_from_json(system_to_json(sys));
    CHECK(rt.n == sys.n);
    CHECK(rt.tau_bar == sys.tau_bar);
    REQUIRE(rt.modes.size() == sys.modes.size());
    for (std::size_t i = 0; i < sys.modes.size(); ++i) {
        CHECK((rt.modes[i].A - sys.modes[i].A).cwiseAbs().maxCoeff() == 0.0);
        CHECK((rt.modes[i].H - sys.modes[i].H).cwiseAbs().maxCoeff() == 0.0);
    }
    // The round-tripped system must produce the identical transform.
    const auto a = assemble_transform(examples::worked_V_plain(), sys);
    const auto b = assemble_transform(examples::worked_V_plain(), rt);
    CHECK((a.Lambda - b.Lambda).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("file save/load round trip") {
    const auto path =
        (std::filesystem::temp_directory_path() / "cwb_io_test.json").string();
    const json out = system_to_json(examples::worked_system());
    save_json_file(path, out);
    const json in = load_json_file(path);
    CHECK(in == out);
    std::remove(path.c_str());
    CHECK_THROWS(load_json_file(path));
}

TEST_CASE("report serialization exposes transformed and original boxes") {
    const auto sys = examples::worked_system();
    const auto cand = assemble_transform(examples::worked_V_plain(), sys);
    const auto delta = make_psi(cand, sys);
    const auto rep = nonlinear_pipeline(cand, delta, Vec::Ones(3), Vec::Ones(3));
    const json j = nonlinear_report_to_json(rep, cand.V);
    CHECK(j.contains("beta"));
    CHECK(j.contains("b"));
    const Vec vb = vector_from_json(j.at("original_box_b"));
    CHECK((vb - cand.abs_V() * rep.b).cwiseAbs().maxCoeff() < 1e-12);

    std::vector<AffineCap> caps;
    for (const auto& m : sys.modes) caps.push_back(cap_of(m.bound, 3));
    const auto acand = assemble_transform(examples::worked_V_affine(), sys);
    const auto arep = affine_pipeline(acand, caps, sys);
    const json ja = affine_report_to_json(arep, acand.V);
    CHECK(ja.contains("rho_R"));
    CHECK(ja.at("stable").get<bool>());
}
