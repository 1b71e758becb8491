#ifndef HELMTRACE_INVERSION_HPP
#define HELMTRACE_INVERSION_HPP

// Outward reconstruction march. Each frequency row carries the impedance
// defect w = phi - phi_free rather than phi itself:
//
//     w' = -i k w (w + 2 phi_free) + i k q,
//
// which keeps free data exactly at w = 0 and stays well scaled as k -> 0,
// where phi_free grows like 1 / (k r log kr). The potential follows the
// trace formula
//
//     q' = (1 + q) (4 / pi) * sum_j W_j F_j,   F = Re w + 1 - sqrt(1 + q).

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "helmtrace/forward.hpp"
#include "helmtrace/quadrature.hpp"
#include "helmtrace/types.hpp"

namespace helmtrace::inversion {

enum class Scheme { euler, heun_cn };

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

/// Right-hand side of the impedance Riccati equation in r.
Complex riccati_rhs(Complex phi, Real q, Real r, Real k, int n);

/// Right-hand side of the defect equation given the free impedance at r.
Complex defect_rhs(Complex w, Complex phi_free, Real q, Real k);

/// Re[phi - phi_free + 1 - sqrt(1+q)]; the k -> 0 limit 1 - sqrt(1+q) at k = 0.
Real trace_integrand(Complex phi, Real q, int n, Real r, Real k);

/// Impedance row at radius r, aligned with the nonzero nodes of a grid.
struct ImpedanceState {
    Real r = 0;
    int n = 0;
    RealArray frequencies;
    ComplexArray phis;
};

/// q' from the trace formula, summing over every grid node (the k = 0 node,
/// if present, contributes the analytic limit).
Real q_derivative(const ImpedanceState& state, Real q, const quadrature::FrequencyGrid& grid);

struct ReconstructionConfig {
    Real h = 1e-3;
    quadrature::FrequencyGrid grid;
    Scheme scheme = Scheme::heun_cn;
    int n = 0;
    Real a = 1, b = 3;
    int threads = 1;
    Real blowup_threshold = 1e3;       // on |w|

    // When set, q is taken from here instead of being estimated (Riccati
    // consistency checks); q' is still reported from the trace formula.
    std::function<Real(Real)> known_potential;
    // Record the impedance row at the step nearest this radius.
    std::optional<Real> snapshot_radius;
};

struct Diagnostics {
    int steps = 0;
    Real h_effective = 0;
    int marched_frequencies = 0;       // k > 0 rows actually evolved
    Real max_abs_phi = 0;
    Real max_abs_defect = 0;
    Real terminal_defect = 0;          // max |w(b, k)|
    int cn_flips = 0;                  // far quadratic root selected
    int cn_ambiguous = 0;              // roots equidistant; predictor kept
    Real initial_defect_slope = 0;     // log-log slope of |w(a,k)| for k <= 1/2 (0 if not measured)
    bool initial_check_passed = true;
    std::string warning;
    Real wall_seconds = 0;
};

struct ReconstructionResult {
    RealArray radii;
    RealArray q_hat;
    RealArray q_prime;
    Diagnostics diagnostics;
    ImpedanceState final_state;
    std::optional<ImpedanceState> snapshot;
};

ReconstructionResult euler_march(const forward::ImpedanceData& data, const ReconstructionConfig& cfg);
ReconstructionResult heun_cn_march(const forward::ImpedanceData& data, const ReconstructionConfig& cfg);
ReconstructionResult reconstruct(const forward::ImpedanceData& data, const ReconstructionConfig& cfg);

/// Stable roots of A x^2 + B x + C = 0 and the one closest to `guess`.
struct QuadraticChoice {
    Complex root;
    bool far_root = false;   // the large-magnitude root was taken
    bool ambiguous = false;  // both roots equally close; `root` is the guess
};
QuadraticChoice nearest_root(Complex a, Complex b, Complex c, Complex guess);

void write_csv(std::ostream& out, const ReconstructionResult& result);
void write_diagnostics(std::ostream& out, const Diagnostics& diagnostics);

}  // namespace helmtrace::inversion

#endif  // HELMTRACE_INVERSION_HPP
