#ifndef HELMTRACE_QUADRATURE_HPP
#define HELMTRACE_QUADRATURE_HPP

// Frequency grids for the trace integral over [-Omega, Omega]:
//  - the plain N-point trapezoid rule,
//  - dyadically graded Gauss-Legendre panels for the log-type behaviour at k = 0,
//  - a least-squares moment-fitted rule for k^m log^n k,
//  - Richardson combination of nested bandlimits, realized purely as weights.

#include <iosfwd>
#include <string>
#include <string_view>

#include "helmtrace/types.hpp"

namespace helmtrace::quadrature {

/// Nodes and weights of a rule on some interval. Nodes ascending.
struct QuadratureRule {
    RealArray nodes;
    RealArray weights;

    template <typename F>
    Real integrate(F&& f) const {
        Real s = 0;
        for (Eigen::Index i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

enum class GridKind { trapezoid, graded_log, moment_fitted };

std::string_view to_string(GridKind kind);
GridKind grid_kind_from_string(std::string_view name);

/// Symmetric frequency grid over [-support, support].
///
/// `omega` is the base bandlimit; after `richardson_levels` extensions at
/// `richardson_ratio` the nodes cover [-omega * ratio^levels, omega * ratio^levels]
/// and the weights realize the telescoped Richardson combination.
struct FrequencyGrid {
    RealArray nodes;
    RealArray weights;
    Real omega = 0;
    GridKind kind = GridKind::trapezoid;
    int richardson_levels = 0;
    Real richardson_ratio = 2;

    // Bulk resolution, reused when shells are added: node spacing, and panel
    // order for Gauss-Legendre bulk panels (0 for trapezoid).
    Real bulk_spacing = 0;
    int panel_order = 0;

    // Set when construction deviated from the request (e.g. a moment fit
    // that missed its target and fell back to graded panels).
    std::string note;

    Eigen::Index size() const { return nodes.size(); }
    Real support() const;

    template <typename F>
    Real integrate(F&& f) const {
        Real s = 0;
        for (Eigen::Index i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

/// Throws DomainError unless nodes are strictly increasing, symmetric about zero
/// and the weights are symmetric.
void validate(const FrequencyGrid& grid);

/// Gauss-Legendre rule of the given order on [lo, hi].
QuadratureRule gauss_legendre(int order, Real lo = -1, Real hi = 1);

/// f_j = 2 Omega (j-1)/(N-1) - Omega with exact trapezoid weights for that
/// spacing. For odd N the k = 0 node is kept; consumers supply the integrand's
/// limit there.
FrequencyGrid trapezoid_grid(Real omega, int n_points);

/// Gauss-Legendre panels on [k_cut 2^-(i+1), k_cut 2^-i], i = 0..depth-1.
/// The closure panel [0, k_cut 2^-depth] is not included.
QuadratureRule graded_log_panels(Real k_cut, int depth, int gauss_order);

/// Composite Gauss-Legendre with `panels` equal panels on [lo, hi].
QuadratureRule composite_gauss_legendre(Real lo, Real hi, int panels, int order);

/// Basis k^m log^n k on [0, k_cut] for the moment-fitted rule.
struct LogBasisSpec {
    Real k_cut = 0.5;
    int m_min = 1, m_max = 18;
    int n_min = -10, n_max = 4;
    Real target_residual = 1e-13;
};

/// Int_0^c k^m log^n k dk. Closed form for n >= 0; graded-panel quadrature,
/// refined until two levels agree, for n < 0.
Real log_moment(int m, int n, Real c);

struct MomentFitReport {
    QuadratureRule rule;
    Real max_residual = 0;    // max over the basis of relative moment error
    Real max_abs_weight = 0;
    bool meets_target = false;
    int worst_m = 0, worst_n = 0;
};

/// Least-squares weights at the Chebyshev points of [0, k_cut] against the
/// analytic moments of the basis. Throws IllConditionedError if any weight
/// exceeds `max_weight` in magnitude.
MomentFitReport moment_fitted_rule(const LogBasisSpec& spec, int n_nodes,
                                   Real max_weight = 1e3);

/// Coefficients c_0..c_L of sum_i c_i I(ratio^i Omega) that cancel tail terms
/// decaying like Omega^-1, Omega^-3, ..., Omega^-(2L-1).
RealArray richardson_coefficients(int levels, Real ratio);

/// Extends `base` by `levels` shells out to ratio^levels * omega, filling each
/// shell with the base bulk rule, and sets weights so that a single weighted
/// sum equals the Richardson combination of the nested band integrals.
FrequencyGrid richardson_combine(const FrequencyGrid& base, int levels, Real ratio);

struct GridOptions {
    GridKind kind = GridKind::graded_log;
    Real omega = 160;          // outer support of the final grid
    int n_freq = 270;          // trapezoid point count; sets the reference spacing 2 omega / (n_freq - 1)
    Real bulk_density = 8;     // panel kinds: bulk nodes per reference spacing
    int richardson_levels = 1;
    Real richardson_ratio = 2;
    Real k_cut = 0.5;
    int graded_depth = 16;
    int graded_order = 6;
    int panel_order = 16;
    int moment_nodes = 35;
};

/// Grid whose outer support is options.omega, with the Richardson base at
/// omega / ratio^levels.
///
/// graded_log: one k = 0 node carrying the closure panel, graded panels on
/// (0, k_cut], Gauss-Legendre bulk panels beyond. moment_fitted: the fitted
/// rule replaces the graded panels and the zero node when it meets its target;
/// otherwise the graded panels are used and `note` records the residual.
FrequencyGrid make_grid(const GridOptions& options);

/// `k,w` rows for audit.
void write_csv(std::ostream& out, const FrequencyGrid& grid);

}  // namespace helmtrace::quadrature

#endif  // HELMTRACE_QUADRATURE_HPP
