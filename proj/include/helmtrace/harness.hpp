#ifndef HELMTRACE_HARNESS_HPP
#define HELMTRACE_HARNESS_HPP

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "helmtrace/forward.hpp"
#include "helmtrace/inversion.hpp"
#include "helmtrace/quadrature.hpp"

namespace helmtrace::harness {

enum class PotentialKind { gaussian, cosine, square, zero };

struct PotentialSpec {
    PotentialKind kind = PotentialKind::gaussian;
    int p = 5, m = 6;                    // cosine parameters
    Real lo = 1.5, hi = 2.5, height = 1;  // square well
};

std::string describe(const PotentialSpec& spec);
PotentialSpec potential_from_string(std::string_view text);  // gaussian | cosine:5:6 | square | zero

struct ExperimentSpec {
    std::string name = "custom";
    PotentialSpec potential;
    int n = 0;
    Real omega = 160;
    int n_freq = 270;
    Real h = 1.0 / 20000;
    inversion::Scheme scheme = inversion::Scheme::heun_cn;
    int richardson_levels = 1;
    Real richardson_ratio = 2;
    quadrature::GridKind grid_kind = quadrature::GridKind::graded_log;
    Real bulk_density = 8;
    Real a = 1, b = 3;
    Real points_per_wavelength = 1500;
    int threads = 1;
};

std::vector<std::string> preset_names();

/// Named settings. The five figure presets use the captions' values with
/// a = 1, b = 3; "reduced", "desk" and the "null*" variants are smaller
/// companions used by the acceptance suite.
ExperimentSpec preset(std::string_view name);

/// Applies key=value overrides (omega, nfreq, h, scheme, richardson, n,
/// threads, potential, grid, density, ratio, ppw, a, b). Unknown keys throw.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);

/// Parses a key=value file; '#' starts a comment.
std::map<std::string, std::string> read_config(std::istream& in);

forward::RadialPotential make_potential(const PotentialSpec& spec, Real a, Real b);
quadrature::GridOptions grid_options(const ExperimentSpec& spec);

struct ErrorReport {
    Real linf = 0;
    Real l2 = 0;
    RealArray radii;
    RealArray error;      // q_hat - q
    Real generate_seconds = 0;
    Real solve_seconds = 0;
};

ErrorReport error_against(const inversion::ReconstructionResult& result, const forward::RadialPotential& truth);

struct ExperimentRun {
    ExperimentSpec spec;
    quadrature::FrequencyGrid grid;
    forward::ImpedanceData data;
    inversion::ReconstructionResult result;
    ErrorReport report;
};

/// Generates data, reconstructs, and measures the error. With a non-empty
/// out_dir also writes data.csv, grid.csv, reconstruction.csv,
/// diagnostics.txt, error.csv, initial_defect.csv and plot.gp there.
ExperimentRun run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir = {});

void write_artifacts(const ExperimentRun& run, const std::filesystem::path& out_dir);

enum class Axis { h, omega, nfreq };
std::string_view to_string(Axis axis);
Axis axis_from_string(std::string_view name);

struct ConvergenceReport {
    Axis axis = Axis::h;
    std::vector<Real> parameter;   // h, omega or n_freq per level, coarse to fine
    std::vector<Real> difference;  // max |q_i - q_{i+1}| on the shared radii, one per level but the last
    std::vector<Real> reference_error;  // max |q_i - q_finest|
    std::vector<Real> truth_error;      // linf against the analytic potential
    std::vector<Real> seconds;
    Real slope = 0;                // order p: differences scale like parameter^p (h) or parameter^-p
};

/// Refines one parameter by `factor` per level (h shrinks, omega and n_freq
/// grow; omega refinement scales n_freq to keep the node spacing). The order
/// is the least-squares log-log slope of successive-level differences.
/// Throws if the projected cost of the finest level exceeds budget_seconds.
ConvergenceReport convergence_study(const ExperimentSpec& base, Axis axis, int levels, Real factor = 2,
                                    Real budget_seconds = 600);

void write_csv(std::ostream& out, const ConvergenceReport& report);

/// One gated check of the verification suite.
struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    Real seconds = 0;
};

struct VerifyOptions {
    int threads = 1;
    std::filesystem::path out_dir;   // artifacts of the experiment runs, if set
    std::function<void(const CheckResult&)> on_result;  // progress callback
};

/// Runs the eight acceptance checks in order.
std::vector<CheckResult> run_verification(const VerifyOptions& options);

}  // namespace helmtrace::harness

#endif  // HELMTRACE_HARNESS_HPP
