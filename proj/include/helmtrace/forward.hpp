#ifndef HELMTRACE_FORWARD_HPP
#define HELMTRACE_FORWARD_HPP

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>

#include "helmtrace/types.hpp"

namespace helmtrace::forward {

/// Compactly supported contrast q(r) on [a, b]. Evaluation outside the
/// open interval returns 0 regardless of the profile.
struct RadialPotential {
    std::string name;
    std::function<Real(Real)> profile;
    std::function<Real(Real)> slope;  // dq/dr where smooth; may be empty
    Real a = 1, b = 3;
    Real q0 = 0, q1 = 0;              // bounds of q on [a, b]

    Real operator()(Real r) const { return r <= a || r >= b ? 0.0 : profile(r); }
    Real derivative(Real r) const;
};

/// exp(-32 (r-2)^2) on [a, b].
RadialPotential gaussian_bump(Real a = 1, Real b = 3);

/// (1/10)[cos(p (r-2) pi) + 1] - (p^2 / (10 m^2)) [1 - cos(m (r-2) pi)].
RadialPotential cosine_potential(int p, int m, Real a = 1, Real b = 3);

/// `height` on [lo, hi], 0 elsewhere.
RadialPotential square_well(Real lo = 1.5, Real hi = 2.5, Real height = 1, Real a = 1, Real b = 3);

RadialPotential zero_potential(Real a = 1, Real b = 3);

/// Scans the profile to fill q0, q1 and checks q0 > -1.
void update_bounds(RadialPotential& pot, int samples = 4001);

/// Rescaled field psi = sqrt(r) u and its r-derivative.
struct FieldState {
    Complex psi, dpsi;
    Real r = 0, k = 0;
    int n = 0;

    /// psi' / (i k psi)
    Complex impedance() const { return dpsi / (I * k * psi); }
};

/// Outgoing free field at r = b.
FieldState boundary_state(int n, Real k, Real b);

/// Default inward step count for a march over `length` at frequency k.
int default_steps(Real k, Real length, Real points_per_wavelength = 1500, int floor = 2000);

/// Classical RK4 for psi'' + k^2 (1+q) psi - (n^2 - 1/4) psi / r^2 = 0 from
/// pot.b down to `stop` (pot.a when NaN; stop = b returns the boundary state).
/// Requires k (b - stop) / steps <= 0.1.
FieldState integrate_inward(const RadialPotential& pot, int n, Real k, int steps,
                            Real stop = std::numeric_limits<Real>::quiet_NaN());

struct ImpedanceData {
    int n = 0;
    Real a = 1, b = 3;
    RealArray frequencies;   // ascending, symmetric, no zero
    ComplexArray values;     // phi(a, k)
};

/// Throws FormatError unless the frequencies are ascending, symmetric, nonzero
/// and the values conjugate-symmetric to `tolerance`.
void validate(const ImpedanceData& data, Real tolerance = 1e-10);

struct ForwardOptions {
    int steps = 0;                       // fixed step count; 0 selects default_steps
    Real points_per_wavelength = 1500;
    int min_steps = 2000;
    int threads = 1;
    Real radius = std::numeric_limits<Real>::quiet_NaN();  // observation radius, pot.a when NaN
};

/// Impedance at the observation radius for every nonzero entry of `nodes`.
/// Only k > 0 is integrated; k < 0 comes from conjugation.
ImpedanceData generate_data(const RadialPotential& pot, int n, std::span<const Real> nodes,
                            const ForwardOptions& options = {});

void write_csv(std::ostream& out, const ImpedanceData& data);
ImpedanceData read_csv(std::istream& in);

}  // namespace helmtrace::forward

#endif  // HELMTRACE_FORWARD_HPP
