#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "helmtrace/harness.hpp"

using namespace helmtrace;
using namespace helmtrace::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentSpec tiny() {
    ExperimentSpec s = preset("desk");
    s.omega = 10;
    s.n_freq = 32;
    s.h = 1.0 / 200;
    return s;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("helmtrace-test-" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("potential names") {
    CHECK(potential_from_string("gaussian").kind == PotentialKind::gaussian);
    const auto c = potential_from_string("cosine:9:10");
    CHECK(c.kind == PotentialKind::cosine);
    CHECK(c.p == 9);
    CHECK(c.m == 10);
    CHECK(describe(c) == "cosine:9:10");
    CHECK(potential_from_string("square").kind == PotentialKind::square);
    CHECK(potential_from_string("zero").kind == PotentialKind::zero);
    CHECK_THROWS_AS(potential_from_string("cosine:x"), FormatError);
    CHECK_THROWS_AS(potential_from_string("lorentz"), FormatError);
}

TEST_CASE("presets carry the figure settings") {
    const auto g0 = preset("gauss-n0");
    CHECK(g0.omega == 160);
    CHECK(g0.n_freq == 270);
    CHECK(g0.h == 1.0 / 20000);
    CHECK(g0.n == 0);
    CHECK(g0.scheme == inversion::Scheme::heun_cn);
    CHECK(g0.richardson_levels == 1);
    const auto g4 = preset("gauss-n4");
    CHECK(g4.n == 4);
    CHECK(g4.omega == 240);
    CHECK(g4.n_freq == 470);
    CHECK(g4.h == 1.0 / 40000);
    CHECK(preset("cos-5-6").potential.m == 6);
    CHECK(preset("cos-9-10").potential.p == 9);
    CHECK(preset("square").potential.kind == PotentialKind::square);
    CHECK(preset("square").richardson_levels == 0);
    CHECK(preset("null").potential.kind == PotentialKind::zero);
    const auto r = preset("reduced");
    CHECK(r.omega == 80);
    CHECK(r.n_freq == 200);
    CHECK(r.h == 1.0 / 4000);
    for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name));
    CHECK_THROWS_AS(preset("fig9"), FormatError);
}

TEST_CASE("settings and config files") {
    ExperimentSpec s;
    apply_setting(s, "h", "1/8000");
    CHECK(s.h == 1.0 / 8000);
    apply_setting(s, "omega", "40");
    apply_setting(s, "nfreq", "128");
    apply_setting(s, "scheme", "euler");
    apply_setting(s, "richardson", "0");
    apply_setting(s, "grid", "trapezoid");
    apply_setting(s, "potential", "cosine:5:6");
    CHECK(s.omega == 40);
    CHECK(s.n_freq == 128);
    CHECK(s.scheme == inversion::Scheme::euler);
    CHECK(s.richardson_levels == 0);
    CHECK(s.grid_kind == quadrature::GridKind::trapezoid);
    CHECK(s.potential.kind == PotentialKind::cosine);
    CHECK_THROWS_AS(apply_setting(s, "nfreq", "12.5"), FormatError);
    CHECK_THROWS_AS(apply_setting(s, "h", "fast"), FormatError);
    CHECK_THROWS_AS(apply_setting(s, "colour", "red"), FormatError);

    std::istringstream cfg("# comment\nomega = 80 \n\nh=1/4000  # trailing\n");
    const auto kv = read_config(cfg);
    CHECK(kv.size() == 2);
    CHECK(kv.at("omega") == "80");
    CHECK(kv.at("h") == "1/4000");
    std::istringstream bad("omega 80\n");
    CHECK_THROWS_AS(read_config(bad), FormatError);
}

TEST_CASE("error report") {
    inversion::ReconstructionResult r;
    r.radii = RealArray::LinSpaced(3, 1.0, 3.0);
    r.q_hat = RealArray::Constant(3, 0.5);
    const auto rep = error_against(r, forward::zero_potential());
    CHECK(rep.linf == 0.5);
    CHECK(rep.l2 == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("experiment run and artifacts") {
    const auto dir = scratch("run");
    const auto run = run_experiment(tiny(), dir);
    CHECK(run.report.linf < 0.2);
    CHECK(run.result.radii.size() == 401);
    for (const char* f : {"data.csv", "grid.csv", "reconstruction.csv", "diagnostics.txt", "error.csv",
                          "initial_defect.csv", "plot.gp"})
        CHECK(fs::exists(dir / f));
    CHECK(slurp(dir / "error.csv").rfind("r,q_exact,q_hat,error\n", 0) == 0);
    CHECK(slurp(dir / "diagnostics.txt").find("linf=") != std::string::npos);

    const auto again = scratch("run-again");
    run_experiment(tiny(), again);
    for (const char* f : {"data.csv", "grid.csv", "reconstruction.csv", "error.csv", "initial_defect.csv"})
        CHECK(slurp(dir / f) == slurp(again / f));
    fs::remove_all(dir);
    fs::remove_all(again);
}

TEST_CASE("convergence study") {
    auto spec = tiny();
    const auto rep = convergence_study(spec, Axis::h, 3);
    CHECK(rep.parameter.size() == 3);
    CHECK(rep.difference.size() == 2);
    CHECK(rep.parameter[2] == doctest::Approx(1.0 / 800));
    CHECK(rep.slope == doctest::Approx(2.0).epsilon(0.1));
    std::ostringstream csv;
    write_csv(csv, rep);
    CHECK(csv.str().find("h,difference_to_next") != std::string::npos);

    CHECK_THROWS_AS(convergence_study(spec, Axis::h, 2), DomainError);
    CHECK_THROWS_AS(convergence_study(spec, Axis::h, 12, 2, 1e-9), Error);
    CHECK(axis_from_string(to_string(Axis::nfreq)) == Axis::nfreq);
    CHECK_THROWS_AS(axis_from_string("k"), FormatError);
}
