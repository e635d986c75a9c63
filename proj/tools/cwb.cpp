// cwb: componentwise bounds for switching linear systems with
// delay-dependent perturbation bounds.
//
// Subcommands:
//   analyze            run a bound pipeline from a JSON config
//   reproduce-example  rerun an embedded worked example against golden values
//   simulate           stress a saved report with randomized trajectories
//
// The output directory defaults to the working directory and can be
// overridden with --output-dir or the CWB_OUTPUT_DIR environment variable.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "analysis_driver.hpp"

namespace fs = std::filesystem;
using namespace cwb;

namespace {

fs::path resolve_output_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("CWB_OUTPUT_DIR"); env && *env)
        return env;
    return fs::current_path();
}

void print_repro(const ReproReport& rep) {
    std::cout << "example: " << rep.example << "\n";
    for (const auto& row : rep.rows) {
        std::cout << (row.pass ? "PASS" : "FAIL") << "  " << row.name
                  << "  expected " << row.expected << "  actual " << row.actual;
        if (!row.note.empty()) std::cout << "  [" << row.note << "]";
        std::cout << "\n";
    }
}

void write_repro_csv(const ReproReport& rep, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "row,pass,expected,actual,note\n";
    auto q = [](std::string s) {
        for (auto& ch : s)
            if (ch == ',') ch = ';';
        return s;
    };
    for (const auto& row : rep.rows)
        out << q(row.name) << ',' << (row.pass ? 1 : 0) << ','
            << q(row.expected) << ',' << q(row.actual) << ',' << q(row.note)
            << "\n";
}

int cmd_analyze(const std::string& config_path, const std::string& pipeline,
                const std::string& v_file, bool force_search,
                std::optional<std::uint64_t> seed, const std::string& out_dir,
                const std::string& out_name) {
    json cj = load_json_file(config_path);
    if (!pipeline.empty()) cj["pipeline"] = pipeline;
    if (!v_file.empty()) {
        cj.erase("v");
        cj["v_file"] = v_file;
    }
    if (force_search) {
        cj.erase("v");
        cj.erase("v_file");
    }
    if (seed) cj["seed"] = *seed;
    if (cj.contains("system_file") && cj["system_file"].is_string()) {
        // Relative system paths resolve against the config file.
        const fs::path p = cj["system_file"].get<std::string>();
        if (p.is_relative())
            cj["system_file"] = (fs::path(config_path).parent_path() / p).string();
    }

    const auto cfg = driver::config_from_json(cj);
    auto res = driver::run_analysis(cfg);
    res.report["exit_code"] = res.exit_code;

    const fs::path dir = resolve_output_dir(out_dir);
    fs::create_directories(dir);
    const fs::path dest = dir / (out_name.empty() ? "report.json" : out_name);
    save_json_file(dest.string(), res.report);

    std::cout << "report: " << dest.string() << "\n";
    if (res.exit_code == driver::kExitOk) {
        std::cout << "status: ok\n";
    } else {
        std::cout << "status: " << res.diagnostic << " (exit "
                  << res.exit_code << ")\n";
    }
    return res.exit_code;
}

int cmd_reproduce(const std::string& name, const std::string& out_dir) {
    ReproReport rep;
    if (name == "sec4_nonlinear") rep = reproduce_nonlinear();
    else if (name == "sec4_affine") rep = reproduce_affine();
    else if (name == "sec4_lyapunov") rep = reproduce_lyapunov();
    else if (name == "dam99") rep = reproduce_verge();
    else if (name == "counterexample") rep = reproduce_no_transform();
    else {
        std::cerr << "unknown example: " << name << "\n";
        return driver::kExitConfig;
    }
    print_repro(rep);
    const fs::path dir = resolve_output_dir(out_dir);
    fs::create_directories(dir);
    write_repro_csv(rep, dir / ("reproduce_" + name + ".csv"));
    return rep.all_pass() ? 0 : 1;
}

int cmd_simulate(const std::string& report_path, int trials,
                 std::uint64_t seed, double tf, double dt) {
    const json rj = load_json_file(report_path);
    const auto sys = system_from_json(rj.at("config").at("system"));
    const auto cand =
        assemble_transform(cmatrix_from_json(rj.at("transform").at("V")), sys);

    ContainmentBounds bounds;
    if (rj.contains("nonlinear")) {
        const auto& nl = rj.at("nonlinear");
        bounds.beta = vector_from_json(nl.at("beta"));
        bounds.b = vector_from_json(nl.at("b"));
        bounds.admissible_init = vector_from_json(nl.at("admissible_init"));
    } else if (rj.contains("affine") && rj.at("affine").value("stable", false)) {
        const auto& af = rj.at("affine");
        bounds.b = vector_from_json(
            af.contains("b_refined") ? af.at("b_refined") : af.at("b_tilde"));
        if (af.contains("semiglobal")) {
            bounds.beta = vector_from_json(af.at("semiglobal").at("beta"));
            bounds.admissible_init = vector_from_json(af.at("semiglobal").at("xi"));
        }
    } else {
        std::cerr << "report carries no testable bounds\n";
        return driver::kExitConfig;
    }

    const auto sum = falsify(sys, cand, bounds, trials, seed, tf, dt);
    std::cout << falsify_to_json(sum).dump(2) << "\n";
    return (sum.ultimate_violations || sum.transient_violations) ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"componentwise bounds for switching systems with "
                 "delay-dependent perturbations"};
    app.require_subcommand(1);

    std::string config_path, pipeline, v_file, out_dir, out_name;
    bool force_search = false;
    std::optional<std::uint64_t> seed;
    auto* analyze = app.add_subcommand("analyze", "run a bound pipeline");
    analyze->add_option("--config", config_path, "JSON analysis config")
        ->required();
    analyze->add_option("--pipeline", pipeline,
                        "constant|nonlinear|affine|lyapunov|all");
    auto* vf = analyze->add_option("--v-file", v_file, "fixed transform matrix");
    analyze->add_flag("--search", force_search, "search for a transform")
        ->excludes(vf);
    analyze->add_option("--seed", seed, "override the config seed");
    analyze->add_option("--output-dir", out_dir, "report directory");
    analyze->add_option("--output", out_name, "report file name");

    std::string example_name;
    auto* repro = app.add_subcommand("reproduce-example",
                                     "check an embedded worked example");
    repro
        ->add_option("name", example_name,
                     "sec4_nonlinear|sec4_affine|sec4_lyapunov|dam99|"
                     "counterexample")
        ->required();
    repro->add_option("--output-dir", out_dir, "CSV directory");

    std::string report_path;
    int trials = 200;
    std::uint64_t sim_seed = 0;
    double tf = 40.0, dt = 2e-3;
    auto* sim = app.add_subcommand("simulate", "stress a saved report");
    sim->add_option("--report", report_path, "report JSON from analyze")
        ->required();
    sim->add_option("--trials", trials, "number of randomized trials");
    sim->add_option("--seed", sim_seed, "trial seed");
    sim->add_option("--tf", tf, "horizon per trial");
    sim->add_option("--dt", dt, "integration step");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed())
            return cmd_analyze(config_path, pipeline, v_file, force_search, seed,
                               out_dir, out_name);
        if (repro->parsed()) return cmd_reproduce(example_name, out_dir);
        if (sim->parsed())
            return cmd_simulate(report_path, trials, sim_seed, tf, dt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return driver::kExitConfig;
    }
    return 0;
}
