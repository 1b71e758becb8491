#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "helmtrace/harness.hpp"

using namespace helmtrace;
namespace fs = std::filesystem;

namespace {

// Flag values are collected as strings and applied through the same
// key=value path as the config file, which is applied last.
struct Settings {
    std::map<std::string, std::string> flags;
    std::string config;
    std::string out_dir;
    std::string base = "desk";

    void add(CLI::App* cmd, bool with_base) {
        cmd->set_help_flag("--help", "print this help message and exit");  // keeps --h free for the step size
        for (const auto& [key, help] : std::map<std::string, std::string>{
                 {"omega", "bandlimit of the frequency data"},
                 {"nfreq", "number of frequencies on [-omega, omega]"},
                 {"h", "radial step (fractions such as 1/20000 accepted)"},
                 {"scheme", "euler or heun-cn"},
                 {"richardson", "Richardson extrapolation levels"},
                 {"n", "angular mode index"},
                 {"threads", "worker threads"},
                 {"potential", "gaussian, cosine:P:M, square or zero"},
                 {"grid", "trapezoid, graded-log or moment-fitted"},
                 {"density", "bulk node density relative to the outer spacing"}}) {
            cmd->add_option_function<std::string>("--" + key, [this, k = key](const std::string& v) { flags[k] = v; },
                                                  help);
        }
        cmd->add_option("--config", config, "key=value file; its entries override flags");
        cmd->add_option("--out-dir", out_dir, "directory for CSV artifacts");
        if (with_base) cmd->add_option("--preset", base, "starting settings")->capture_default_str();
    }

    harness::ExperimentSpec resolve(harness::ExperimentSpec spec) const {
        for (const auto& [k, v] : flags) harness::apply_setting(spec, k, v);
        if (!config.empty()) {
            std::ifstream in(config);
            if (!in) throw Error("cannot open config file " + config);
            for (const auto& [k, v] : harness::read_config(in)) {
                if (k == "out-dir" || k == "out_dir") continue;
                harness::apply_setting(spec, k, v);
            }
        }
        return spec;
    }

    fs::path output_dir(const fs::path& fallback) const {
        if (!config.empty()) {
            std::ifstream in(config);
            const auto kv = harness::read_config(in);
            for (const char* k : {"out-dir", "out_dir"})
                if (auto it = kv.find(k); it != kv.end()) return it->second;
        }
        return out_dir.empty() ? fallback : fs::path(out_dir);
    }
};

quadrature::FrequencyGrid grid_for(const harness::ExperimentSpec& spec) {
    return quadrature::make_grid(harness::grid_options(spec));
}

int run_forward(const Settings& s) {
    const auto spec = s.resolve(harness::preset(s.base));
    const auto grid = grid_for(spec);
    const auto pot = harness::make_potential(spec.potential, spec.a, spec.b);
    forward::ForwardOptions fo;
    fo.threads = spec.threads;
    fo.points_per_wavelength = spec.points_per_wavelength;
    const auto data = forward::generate_data(pot, spec.n, std::span<const Real>(grid.nodes.data(), grid.size()), fo);
    const fs::path dir = s.output_dir("out/forward");
    fs::create_directories(dir);
    std::ofstream d(dir / "data.csv"), g(dir / "grid.csv");
    forward::write_csv(d, data);
    quadrature::write_csv(g, grid);
    std::printf("wrote %ld frequencies (%s, n=%d) to %s\n", static_cast<long>(data.frequencies.size()),
                harness::describe(spec.potential).c_str(), spec.n, dir.string().c_str());
    return EXIT_SUCCESS;
}

int run_invert(const Settings& s, const std::string& data_path, bool compare) {
    const auto spec = s.resolve(harness::preset(s.base));
    std::ifstream in(data_path);
    if (!in) throw Error("cannot open data file " + data_path);
    const auto data = forward::read_csv(in);
    inversion::ReconstructionConfig cfg;
    cfg.grid = grid_for(spec);
    cfg.h = spec.h;
    cfg.scheme = spec.scheme;
    cfg.n = data.n;
    cfg.a = data.a;
    cfg.b = data.b;
    cfg.threads = spec.threads;
    const auto result = inversion::reconstruct(data, cfg);
    const fs::path dir = s.output_dir("out/invert");
    fs::create_directories(dir);
    std::ofstream r(dir / "reconstruction.csv"), d(dir / "diagnostics.txt");
    inversion::write_csv(r, result);
    inversion::write_diagnostics(d, result.diagnostics);
    if (!result.diagnostics.warning.empty()) std::fprintf(stderr, "warning: %s\n", result.diagnostics.warning.c_str());
    std::printf("reconstructed %d steps in %.2f s -> %s\n", result.diagnostics.steps,
                result.diagnostics.wall_seconds, dir.string().c_str());
    if (compare) {
        const auto rep = harness::error_against(result, harness::make_potential(spec.potential, data.a, data.b));
        std::printf("max error against %s: %.3e\n", harness::describe(spec.potential).c_str(), rep.linf);
    }
    return EXIT_SUCCESS;
}

int run_named_experiment(const Settings& s, const std::string& name) {
    auto spec = s.resolve(harness::preset(name));
    const fs::path dir = s.output_dir(fs::path("out") / name);
    const auto run = harness::run_experiment(spec, dir);
    std::printf("%s: max error %.3e, L2 error %.3e, data %.1f s, solve %.1f s, %ld nodes -> %s\n", name.c_str(),
                run.report.linf, run.report.l2, run.report.generate_seconds, run.report.solve_seconds,
                static_cast<long>(run.grid.size()), dir.string().c_str());
    if (!run.result.diagnostics.warning.empty())
        std::fprintf(stderr, "warning: %s\n", run.result.diagnostics.warning.c_str());
    return EXIT_SUCCESS;
}

int run_converge(const Settings& s, const std::string& axis_name, int levels, double factor, double budget) {
    const auto axis = harness::axis_from_string(axis_name);
    auto spec = s.resolve(harness::preset(s.base));
    const auto report = harness::convergence_study(spec, axis, levels, factor, budget);
    const fs::path dir = s.output_dir("out");
    fs::create_directories(dir);
    std::ofstream out(dir / ("convergence-" + axis_name + ".csv"));
    harness::write_csv(out, report);
    harness::write_csv(std::cout, report);
    std::printf("observed order along %s: %.3f\n", axis_name.c_str(), report.slope);
    return EXIT_SUCCESS;
}

int run_verify(const Settings& s) {
    harness::VerifyOptions o;
    if (auto it = s.flags.find("threads"); it != s.flags.end()) o.threads = std::stoi(it->second);
    o.out_dir = s.output_dir({});
    o.on_result = [](const harness::CheckResult& c) {
        std::printf("%s %d %s (%.1f s): %s\n", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(), c.seconds,
                    c.detail.c_str());
        std::fflush(stdout);
    };
    int failed = 0;
    for (const auto& c : harness::run_verification(o)) failed += c.passed ? 0 : 1;
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial Helmholtz inverse solver: impedance march with a trace formula"};
    app.require_subcommand(1);

    Settings fwd, inv, exp, conv, ver;
    auto* c_forward = app.add_subcommand("forward", "generate impedance data at the inner radius");
    fwd.add(c_forward, true);

    auto* c_invert = app.add_subcommand("invert", "reconstruct the potential from an impedance CSV");
    inv.add(c_invert, true);
    std::string data_path;
    bool compare = false;
    c_invert->add_option("data", data_path, "impedance CSV written by 'forward'")->required();
    c_invert->add_flag("--compare", compare, "report the error against --potential");

    auto* c_exp = app.add_subcommand("experiment", "run a named experiment and write all artifacts");
    exp.add(c_exp, false);
    std::string preset_name;
    c_exp->add_option("preset", preset_name, "preset name")
        ->required()
        ->check(CLI::IsMember(harness::preset_names()));

    auto* c_conv = app.add_subcommand("converge", "self-convergence study along one parameter");
    conv.add(c_conv, true);
    std::string axis;
    int levels = 4;
    double factor = 2, budget = 600;
    c_conv->add_option("axis", axis, "h, omega or nfreq")->required()->check(CLI::IsMember({"h", "omega", "nfreq"}));
    c_conv->add_option("--levels", levels, "refinement levels")->capture_default_str();
    c_conv->add_option("--factor", factor, "refinement factor per level")->capture_default_str();
    c_conv->add_option("--budget", budget, "abort if the finest level is projected to take longer (s)")
        ->capture_default_str();

    auto* c_verify = app.add_subcommand("verify", "run the eight acceptance checks");
    ver.add(c_verify, false);

    CLI11_PARSE(app, argc, argv);
    try {
        if (c_forward->parsed()) return run_forward(fwd);
        if (c_invert->parsed()) return run_invert(inv, data_path, compare);
        if (c_exp->parsed()) return run_named_experiment(exp, preset_name);
        if (c_conv->parsed()) return run_converge(conv, axis, levels, factor, budget);
        if (c_verify->parsed()) return run_verify(ver);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return EXIT_FAILURE;
}
