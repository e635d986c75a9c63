#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwbounds/bounds.hpp"
#include "cwbounds/lyapunov.hpp"
#include "cwbounds/matrix.hpp"
#include "cwbounds/sim.hpp"
#include "cwbounds/system.hpp"
#include "cwbounds/transform.hpp"

namespace cwb {

using nlohmann::json;

/// Matrices serialize as row-major nested arrays; complex entries as
/// [re, im] pairs, real entries as bare numbers.
inline json matrix_to_json(const Mat& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json matrix_to_json(const CMat& M) {
    if (M.imag().isZero(0.0)) return matrix_to_json(Mat(M.real()));
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            row.push_back(json::array({M(i, j).real(), M(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json vector_to_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index j = 0; j < v.size(); ++j) out.push_back(v(j));
    return out;
}

inline std::complex<double> entry_from_json(const json& e) {
    if (e.is_number()) return {e.get<double>(), 0.0};
    if (e.is_array() && e.size() == 2)
        return {e[0].get<double>(), e[1].get<double>()};
    throw std::invalid_argument("matrix entry must be a number or [re, im]");
}

inline CMat cmatrix_from_json(const json& j) {
    if (!j.is_array() || j.empty())
        throw std::invalid_argument("matrix must be a nonempty array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    CMat M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols)
            throw std::invalid_argument("matrix rows must share a length");
        for (Eigen::Index c = 0; c < cols; ++c)
            M(i, c) = entry_from_json(j[static_cast<std::size_t>(i)]
                                       [static_cast<std::size_t>(c)]);
    }
    return M;
}

inline Mat matrix_from_json(const json& j) {
    const CMat M = cmatrix_from_json(j);
    if (!M.imag().isZero(0.0))
        throw std::invalid_argument("expected a real matrix");
    return M.real();
}

inline Vec vector_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("vector must be an array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

inline PerturbationBound bound_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant")
        return PerturbationBound::constant(vector_from_json(j.at("w")));
    if (type == "affine")
        return PerturbationBound::affine_bound(matrix_from_json(j.at("F")),
                                               vector_from_json(j.at("w")));
    if (type == "expr") {
        std::vector<BoundExpr> comps;
        for (const auto& s : j.at("components"))
            comps.push_back(BoundExpr::parse(s.get<std::string>()));
        auto b = PerturbationBound::expression(std::move(comps));
        if (j.contains("cap"))
            b.declared_cap = AffineCap{matrix_from_json(j["cap"].at("F")),
                                       vector_from_json(j["cap"].at("w"))};
        return b;
    }
    throw std::invalid_argument("bound type must be constant|affine|expr");
}

inline json bound_to_json(const PerturbationBound& b) {
    json j;
    switch (b.kind) {
        case PerturbationBound::Kind::Constant:
            j["type"] = "constant";
            j["w"] = vector_to_json(b.w_const);
            break;
        case PerturbationBound::Kind::Affine:
            j["type"] = "affine";
            j["F"] = matrix_to_json(b.affine.F);
            j["w"] = vector_to_json(b.affine.w);
            break;
        case PerturbationBound::Kind::Expression: {
            j["type"] = "expr";
            json comps = json::array();
            for (const auto& c : b.components) comps.push_back(c.str());
            j["components"] = std::move(comps);
            if (b.declared_cap) {
                j["cap"]["F"] = matrix_to_json(b.declared_cap->F);
                j["cap"]["w"] = vector_to_json(b.declared_cap->w);
            }
            break;
        }
    }
    return j;
}

inline SwitchingSystem system_from_json(const json& j) {
    SwitchingSystem sys;
    sys.n = j.at("n").get<int>();
    sys.tau_bar = j.value("tau_bar", 0.0);
    for (const auto& mj : j.at("modes")) {
        SwitchingSystem::Mode m;
        m.A = matrix_from_json(mj.at("A"));
        m.H = matrix_from_json(mj.at("H"));
        m.bound = bound_from_json(mj.at("bound"));
        sys.modes.push_back(std::move(m));
    }
    sys.validate();
    return sys;
}

inline json system_to_json(const SwitchingSystem& sys) {
    json j;
    j["n"] = sys.n;
    j["tau_bar"] = sys.tau_bar;
    j["modes"] = json::array();
    for (const auto& m : sys.modes) {
        json mj;
        mj["A"] = matrix_to_json(m.A);
        mj["H"] = matrix_to_json(m.H);
        mj["bound"] = bound_to_json(m.bound);
        j["modes"].push_back(std::move(mj));
    }
    return j;
}

inline json transform_to_json(const TransformCandidate& c) {
    json j;
    j["V"] = matrix_to_json(c.V);
    j["Lambda"] = matrix_to_json(c.Lambda);
    j["objective"] = c.objective;
    j["condition_V"] = c.condition_V;
    json modes = json::array();
    for (const auto& M : c.mode_metzlerized) modes.push_back(matrix_to_json(M));
    j["mode_metzlerized"] = std::move(modes);
    return j;
}

inline json nonlinear_report_to_json(const NonlinearBoundReport& r, const CMat& V) {
    json j;
    j["beta"] = vector_to_json(r.beta);
    j["T0_beta"] = vector_to_json(r.T0_beta);
    j["b"] = vector_to_json(r.b);
    j["gamma"] = vector_to_json(r.gamma);
    j["p_c"] = vector_to_json(r.p_c);
    j["eps_bar"] = r.eps_bar;
    j["admissible_init"] = vector_to_json(r.admissible_init);
    j["original_box_beta"] = vector_to_json(to_original_box(V, r.beta).radii);
    j["original_box_b"] = vector_to_json(to_original_box(V, r.b).radii);
    return j;
}

inline json affine_report_to_json(const AffineBoundReport& r, const CMat& V) {
    json j;
    j["F_bar"] = matrix_to_json(r.F_bar);
    j["w_bar"] = vector_to_json(r.w_bar);
    j["rho_R"] = r.rho_R;
    j["abscissa_Lambda_F"] = r.abscissa_Lambda_F;
    j["stable"] = r.stable;
    if (r.stable) {
        j["b_tilde"] = vector_to_json(r.b_tilde);
        j["original_box_b_tilde"] = vector_to_json(to_original_box(V, r.b_tilde).radii);
        if (r.b_refined) {
            j["b_refined"] = vector_to_json(*r.b_refined);
            j["original_box_b_refined"] =
                vector_to_json(to_original_box(V, *r.b_refined).radii);
        }
    }
    return j;
}

inline json level_report_to_json(const LevelSetReport& r) {
    json j;
    j["feasible"] = r.feasible;
    j["direction_samples"] = r.direction_samples;
    j["margin"] = r.margin;
    if (r.feasible) {
        j["k"] = r.k;
        j["x_bar"] = vector_to_json(r.x_bar);
        j["refined_directions"] = r.refined_directions;
    } else if (r.infeasible_direction) {
        j["infeasible_direction"] = vector_to_json(*r.infeasible_direction);
    }
    return j;
}

inline json falsify_to_json(const FalsifySummary& s) {
    json j;
    j["trials"] = s.trials;
    j["ultimate_violations"] = s.ultimate_violations;
    j["transient_violations"] = s.transient_violations;
    j["violating_seeds"] = s.violating_seeds;
    return j;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

} // namespace cwb
