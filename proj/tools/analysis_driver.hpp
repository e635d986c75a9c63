#pragma once

// Orchestration shared by the cwb CLI and the acceptance runner: one config
// in, one JSON report document plus a documented exit code out.
//
// Exit codes: 0 success, 1 configuration error, 2 no feasible transform,
// 3 lifted affine cap not contractive, 4 no finite transient fixed point.

#include <chrono>
#include <optional>
#include <string>

#include "cwbounds/bounds.hpp"
#include "cwbounds/json_io.hpp"
#include "cwbounds/lyapunov.hpp"
#include "cwbounds/reproduce.hpp"
#include "cwbounds/sim.hpp"

namespace cwb::driver {

inline constexpr const char* kToolVersion = "cwb 1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNoTransform = 2;
inline constexpr int kExitNotContractive = 3;
inline constexpr int kExitNoBeta = 4;

struct AnalysisConfig {
    SwitchingSystem system;
    std::string pipeline = "all"; // constant|nonlinear|affine|lyapunov|all
    std::optional<CMat> V;        // fixed transform; search when absent
    SearchConfig search;
    std::uint64_t seed = 0;
    Vec alpha;            // transient offset, defaults to 1
    Vec c;                // margin direction, defaults to 1
    Vec init_box;         // constant-pipeline initial box, defaults to 1
    std::optional<Mat> P; // supplied quadratic certificate
};

struct AnalysisResult {
    json report;
    int exit_code = kExitOk;
    std::string diagnostic;
};

inline AnalysisConfig config_from_json(const json& j) {
    AnalysisConfig filled;
    if (j.contains("system")) filled.system = system_from_json(j.at("system"));
    else if (j.contains("system_file"))
        filled.system = system_from_json(load_json_file(j.at("system_file")));
    else throw std::invalid_argument("config needs system or system_file");

    filled.pipeline = j.value("pipeline", std::string("all"));
    if (filled.pipeline != "constant" && filled.pipeline != "nonlinear" &&
        filled.pipeline != "affine" && filled.pipeline != "lyapunov" &&
        filled.pipeline != "all")
        throw std::invalid_argument("unknown pipeline: " + filled.pipeline);

    if (j.contains("v")) filled.V = cmatrix_from_json(j.at("v"));
    else if (j.contains("v_file"))
        filled.V = cmatrix_from_json(load_json_file(j.at("v_file")));

    if (j.contains("search")) {
        const auto& s = j.at("search");
        filled.search.restarts = s.value("restarts", filled.search.restarts);
        filled.search.max_evals = s.value("max_evals", filled.search.max_evals);
        filled.search.entry_bound = s.value("entry_bound", filled.search.entry_bound);
        if (s.value("objective", std::string("plain")) == "affine")
            filled.search.mode = SearchConfig::Objective::Affine;
    }
    filled.seed = j.value("seed", std::uint64_t{0});
    filled.search.seed = filled.seed;

    const Eigen::Index n = filled.system.n;
    filled.alpha = j.contains("alpha") ? vector_from_json(j.at("alpha")) : Vec::Ones(n);
    filled.c = j.contains("c") ? vector_from_json(j.at("c")) : Vec::Ones(n);
    filled.init_box =
        j.contains("init_box") ? vector_from_json(j.at("init_box")) : Vec::Ones(n);
    if (j.contains("p")) filled.P = matrix_from_json(j.at("p"));
    else if (j.contains("p_file"))
        filled.P = matrix_from_json(load_json_file(j.at("p_file")));
    return filled;
}

inline json config_echo(const AnalysisConfig& filled) {
    json j;
    j["system"] = system_to_json(filled.system);
    j["pipeline"] = filled.pipeline;
    j["seed"] = filled.seed;
    j["alpha"] = vector_to_json(filled.alpha);
    j["c"] = vector_to_json(filled.c);
    j["init_box"] = vector_to_json(filled.init_box);
    if (filled.V) j["v"] = matrix_to_json(*filled.V);
    else {
        j["search"]["restarts"] = filled.search.restarts;
        j["search"]["max_evals"] = filled.search.max_evals;
        j["search"]["entry_bound"] = filled.search.entry_bound;
        j["search"]["objective"] =
            filled.search.mode == SearchConfig::Objective::Affine ? "affine" : "plain";
    }
    if (filled.P) j["p"] = matrix_to_json(*filled.P);
    return j;
}

inline AnalysisResult run_analysis(const AnalysisConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    AnalysisResult res;
    AnalysisConfig filled = cfg;
    const Eigen::Index n = filled.system.n;
    if (filled.alpha.size() == 0) filled.alpha = Vec::Ones(n);
    if (filled.c.size() == 0) filled.c = Vec::Ones(n);
    if (filled.init_box.size() == 0) filled.init_box = Vec::Ones(n);

    res.report["tool_version"] = kToolVersion;
    res.report["config"] = config_echo(filled);
    filled.system.validate();
    const bool all = filled.pipeline == "all";

    // Transform: fixed V or multi-restart search.
    TransformCandidate cand;
    if (filled.V) {
        cand = assemble_transform(*filled.V, filled.system);
    } else {
        SearchConfig sc = filled.search;
        if (filled.pipeline == "affine") sc.mode = SearchConfig::Objective::Affine;
        const auto sr = search_v(filled.system, sc);
        cand = sr.best;
        json lg = json::array();
        for (const auto& l : sr.log)
            lg.push_back({{"restart", l.restart},
                          {"start", l.start_kind},
                          {"evals", l.evals},
                          {"objective", l.best_objective}});
        res.report["search_log"] = std::move(lg);
    }
    res.report["transform"] = transform_to_json(cand);
    const auto hurwitz = metzler_hurwitz_check(cand.Lambda);
    if (!hurwitz.is_hurwitz) {
        res.exit_code = kExitNoTransform;
        res.diagnostic = "no transform with a Hurwitz comparison matrix";
        res.report["diagnostic"] = res.diagnostic;
        return res;
    }

    const auto delta = make_psi(cand, filled.system);

    if (filled.pipeline == "constant" || all) {
        bool all_constant = true;
        std::vector<Vec> mode_w;
        for (const auto& m : filled.system.modes) {
            if (m.bound.kind != PerturbationBound::Kind::Constant)
                all_constant = false;
            else mode_w.push_back(m.bound.w_const);
        }
        if (all_constant) {
            const auto cb =
                constant_bounds(cand, filled.system, mode_w, filled.init_box);
            json j;
            j["z"] = vector_to_json(cb.z);
            j["eta"] = vector_to_json(cb.eta);
            j["ultimate"] = vector_to_json(cb.ultimate);
            j["original_box_ultimate"] =
                vector_to_json(to_original_box(cand.V, cb.ultimate).radii);
            res.report["constant"] = std::move(j);
        } else if (!all) {
            res.exit_code = kExitConfig;
            res.diagnostic = "constant pipeline needs constant bounds on every mode";
            res.report["diagnostic"] = res.diagnostic;
            return res;
        }
    }

    if (filled.pipeline == "nonlinear" || all) {
        try {
            const auto rep = nonlinear_pipeline(cand, delta, filled.alpha, filled.c);
            res.report["nonlinear"] = nonlinear_report_to_json(rep, cand.V);
            const auto inv = invariance_check(cand, delta, rep.b);
            res.report["nonlinear"]["invariance_pass"] = inv.pass;
            res.report["nonlinear"]["invariance_constructive"] = inv.constructive;
        } catch (const std::runtime_error& e) {
            res.exit_code = kExitNoBeta;
            res.diagnostic = e.what();
            res.report["diagnostic"] = res.diagnostic;
            return res;
        }
    }

    bool have_caps = true;
    for (const auto& m : filled.system.modes)
        if (m.bound.kind == PerturbationBound::Kind::Expression &&
            !m.bound.declared_cap)
            have_caps = false;

    std::optional<AffineBoundReport> affine;
    if (filled.pipeline == "affine" || all) {
        if (!have_caps) {
            if (!all) {
                res.exit_code = kExitConfig;
                res.diagnostic = "affine pipeline needs an affine cap on every mode";
                res.report["diagnostic"] = res.diagnostic;
                return res;
            }
        } else {
            std::vector<AffineCap> caps;
            for (const auto& m : filled.system.modes)
                caps.push_back(cap_of(m.bound, filled.system.n));
            affine = affine_pipeline(cand, caps, filled.system, delta);
            res.report["affine"] = affine_report_to_json(*affine, cand.V);
            if (!affine->stable) {
                res.exit_code = kExitNotContractive;
                res.diagnostic = "lifted affine cap is not contractive (rho >= 1)";
                res.report["diagnostic"] = res.diagnostic;
                return res;
            }
            const auto sg = semiglobal_bound(cand, *affine, delta, filled.init_box);
            res.report["affine"]["semiglobal"] = {
                {"beta", vector_to_json(sg.beta)},
                {"b", vector_to_json(sg.b)},
                {"xi", vector_to_json(sg.gamma)}};
        }
    }

    if (filled.pipeline == "lyapunov" || all) {
        std::optional<QuadraticCertificate> cert;
        SwitchingSystem undelayed = filled.system;
        undelayed.tau_bar = 0.0; // the derivative bound needs theta = |x|
        if (filled.P) {
            cert = QuadraticCertificate::supplied(*filled.P, undelayed);
        } else if (have_caps && affine && affine->stable) {
            const auto dl =
                diagonal_lyapunov(Mat(cand.Lambda + affine->F_bar));
            cert = QuadraticCertificate::from_diag(cand.V, dl.d, undelayed);
        }
        if (cert) {
            json j;
            j["P"] = matrix_to_json(cert->P);
            j["source"] = cert->source == QuadraticCertificate::Source::Supplied
                              ? "supplied"
                              : "from_diag";
            j["mode_margins"] = cert->mode_margins;
            j["delay_ignored"] = filled.system.tau_bar != 0.0;
            LevelSearchOptions lopt;
            lopt.seed = filled.seed;
            const auto lvl = level_search(cert->P, undelayed, lopt);
            j["level"] = level_report_to_json(lvl);
            res.report["lyapunov"] = std::move(j);
        } else if (!all) {
            res.exit_code = kExitConfig;
            res.diagnostic = "lyapunov pipeline needs p, or affine caps to "
                             "construct a certificate";
            res.report["diagnostic"] = res.diagnostic;
            return res;
        }
    }

    res.report["timings"]["total_ms"] = ms_since(t_start);
    return res;
}

/// Determinism surface: everything except wall-clock timings, which are the
/// only intentionally non-reproducible fields in a report.
inline json strip_timings(json report) {
    report.erase("timings");
    return report;
}

} // namespace cwb::driver
