#include "helmtrace/forward.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "helmtrace/parallel.hpp"
#include "helmtrace/specfun.hpp"

namespace helmtrace::forward {

Real RadialPotential::derivative(Real r) const {
    if (r <= a || r >= b) return 0;
    if (slope) return slope(r);
    const Real d = 1e-5 * (b - a);
    return ((*this)(r + d) - (*this)(r - d)) / (2 * d);
}

void update_bounds(RadialPotential& pot, int samples) {
    Real lo = 0, hi = 0;
    for (int i = 0; i < samples; ++i) {
        const Real q = pot.profile(pot.a + (pot.b - pot.a) * i / (samples - 1));
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    if (!(lo > -1)) throw DomainError("potential '" + pot.name + "' reaches q <= -1");
    pot.q0 = lo;
    pot.q1 = hi;
}

RadialPotential gaussian_bump(Real a, Real b) {
    RadialPotential pot;
    pot.name = "gaussian";
    pot.profile = [](Real r) { return std::exp(-32 * (r - 2) * (r - 2)); };
    pot.slope = [](Real r) { return -64 * (r - 2) * std::exp(-32 * (r - 2) * (r - 2)); };
    pot.a = a;
    pot.b = b;
    update_bounds(pot);
    return pot;
}

RadialPotential cosine_potential(int p, int m, Real a, Real b) {
    RadialPotential pot;
    pot.name = "cosine(" + std::to_string(p) + "," + std::to_string(m) + ")";
    const Real c = Real(p * p) / (10.0 * m * m);
    pot.profile = [p, m, c](Real r) {
        return 0.1 * (std::cos(p * (r - 2) * pi) + 1) - c * (1 - std::cos(m * (r - 2) * pi));
    };
    pot.slope = [p, m, c](Real r) {
        return -0.1 * p * pi * std::sin(p * (r - 2) * pi) - c * m * pi * std::sin(m * (r - 2) * pi);
    };
    pot.a = a;
    pot.b = b;
    update_bounds(pot);
    return pot;
}

RadialPotential square_well(Real lo, Real hi, Real height, Real a, Real b) {
    RadialPotential pot;
    pot.name = "square";
    pot.profile = [lo, hi, height](Real r) { return r >= lo && r <= hi ? height : 0.0; };
    pot.slope = [](Real) { return 0.0; };
    pot.a = a;
    pot.b = b;
    update_bounds(pot);
    return pot;
}

RadialPotential zero_potential(Real a, Real b) {
    RadialPotential pot;
    pot.name = "zero";
    pot.profile = [](Real) { return 0.0; };
    pot.slope = [](Real) { return 0.0; };
    pot.a = a;
    pot.b = b;
    return pot;
}

FieldState boundary_state(int n, Real k, Real b) {
    if (k == 0) throw DomainError("boundary state needs k != 0");
    if (!(b > 0)) throw DomainError("boundary state needs b > 0");
    const Real kk = std::abs(k);
    const auto [h, hp] = specfun::hankel1<Real>(n, Complex(kk * b, 0));
    const Real sb = std::sqrt(b);
    FieldState s{sb * h, kk * sb * hp + h / (2 * sb), b, k, n};
    if (k < 0) {
        s.psi = std::conj(s.psi);
        s.dpsi = std::conj(s.dpsi);
    }
    return s;
}

int default_steps(Real k, Real length, Real points_per_wavelength, int floor) {
    const Real wavelengths = std::abs(k) * length / (2 * pi);
    return std::max(floor, static_cast<int>(std::ceil(points_per_wavelength * wavelengths)));
}

FieldState integrate_inward(const RadialPotential& pot, int n, Real k, int steps, Real stop) {
    if (std::isnan(stop)) stop = pot.a;
    if (!(stop > 0) || !(stop <= pot.b)) throw DomainError("stop radius must lie in (0, b]");
    if (steps < 1) throw DomainError("step count must be positive");
    if (stop == pot.b) return boundary_state(n, k, pot.b);
    const Real length = pot.b - stop;
    if (std::abs(k) * length / steps > 0.1) {
        std::ostringstream msg;
        msg << "k (b - r) / steps = " << std::abs(k) * length / steps << " exceeds 0.1";
        throw StepResolutionError(msg.str());
    }
    const FieldState start = boundary_state(n, std::abs(k), pot.b);
    const Real kk = std::abs(k), k2 = kk * kk, centrifugal = n * n - 0.25;
    auto coefficient = [&](Real r) { return centrifugal / (r * r) - k2 * (1 + pot(r)); };

    const Real h = -length / steps;
    Complex psi = start.psi, dpsi = start.dpsi;
    Real peak = std::abs(psi);
    Real v_here = coefficient(pot.b);
    for (int i = 0; i < steps; ++i) {
        const Real r = pot.b + h * i;
        const Real r_next = i + 1 == steps ? stop : pot.b + h * (i + 1);
        const Real v_mid = coefficient(r + h / 2);
        const Real v_next = coefficient(r_next);
        const Complex k1p = dpsi, k1d = v_here * psi;
        const Complex k2p = dpsi + h / 2 * k1d, k2d = v_mid * (psi + h / 2 * k1p);
        const Complex k3p = dpsi + h / 2 * k2d, k3d = v_mid * (psi + h / 2 * k2p);
        const Complex k4p = dpsi + h * k3d, k4d = v_next * (psi + h * k3p);
        psi += h / 6 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        dpsi += h / 6 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        v_here = v_next;
        const Real mag = std::abs(psi);
        peak = std::max(peak, mag);
        if (!(mag >= 1e-10 * peak)) {
            std::ostringstream msg;
            msg << "psi collapsed to " << mag << " at r = " << r_next << " (k = " << k << ")";
            throw NonvanishingViolation(msg.str());
        }
    }
    FieldState out{psi, dpsi, stop, kk, n};
    if (k < 0) {
        out.psi = std::conj(out.psi);
        out.dpsi = std::conj(out.dpsi);
        out.k = k;
    }
    return out;
}

void validate(const ImpedanceData& data, Real tolerance) {
    const Eigen::Index m = data.frequencies.size();
    if (m == 0 || data.values.size() != m) throw FormatError("impedance data has mismatched or empty columns");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (data.frequencies[i] == 0) throw FormatError("impedance data must exclude k = 0");
        if (i > 0 && !(data.frequencies[i] > data.frequencies[i - 1]))
            throw FormatError("impedance frequencies must be strictly increasing");
        const Eigen::Index j = m - 1 - i;
        const Real k = data.frequencies[i];
        if (std::abs(k + data.frequencies[j]) > 1e-12 * std::max<Real>(1, std::abs(k)))
            throw FormatError("impedance frequencies must be symmetric about 0");
        if (std::abs(data.values[i] - std::conj(data.values[j])) > tolerance * std::max<Real>(1, std::abs(data.values[i]))) {
            std::ostringstream msg;
            msg << "impedance data violates conjugate symmetry at k = " << k;
            throw FormatError(msg.str());
        }
    }
}

ImpedanceData generate_data(const RadialPotential& pot, int n, std::span<const Real> nodes,
                            const ForwardOptions& options) {
    const Real radius = std::isnan(options.radius) ? pot.a : options.radius;
    std::vector<Real> ks;
    for (Real k : nodes)
        if (k != 0) ks.push_back(k);
    std::sort(ks.begin(), ks.end());
    const std::size_t m = ks.size();
    if (m == 0) throw DomainError("no nonzero frequencies to generate");
    for (std::size_t i = 0; i < m; ++i)
        if (std::abs(ks[i] + ks[m - 1 - i]) > 1e-12 * std::max<Real>(1, std::abs(ks[i])))
            throw DomainError("frequency nodes must be symmetric about 0");

    ImpedanceData data;
    data.n = n;
    data.a = radius;
    data.b = pot.b;
    data.frequencies = Eigen::Map<const RealArray>(ks.data(), static_cast<Eigen::Index>(m));
    data.values.resize(static_cast<Eigen::Index>(m));

    const std::size_t half = m / 2;  // positive nodes occupy [m - half, m)
    WorkerPool pool(options.threads);
    pool.run(half, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const std::size_t idx = m - half + p;
            const Real k = ks[idx];
            const int steps = options.steps > 0
                                  ? options.steps
                                  : default_steps(k, pot.b - radius, options.points_per_wavelength,
                                                  options.min_steps);
            FieldState s;
            try {
                s = integrate_inward(pot, n, k, steps, radius);
            } catch (const StepResolutionError& e) {
                throw StepResolutionError("at k = " + std::to_string(k) + ": " + e.what());
            } catch (const NonvanishingViolation& e) {
                throw NonvanishingViolation("at k = " + std::to_string(k) + ": " + e.what());
            }
            const Complex phi = s.impedance();
            data.values[static_cast<Eigen::Index>(idx)] = phi;
            data.values[static_cast<Eigen::Index>(m - 1 - idx)] = std::conj(phi);
        }
    });
    return data;
}

void write_csv(std::ostream& out, const ImpedanceData& data) {
    out << std::setprecision(17);
    out << "# n=" << data.n << " a=" << data.a << " b=" << data.b << "\n";
    out << "k,re_phi,im_phi\n";
    for (Eigen::Index i = 0; i < data.frequencies.size(); ++i)
        out << data.frequencies[i] << "," << data.values[i].real() << "," << data.values[i].imag() << "\n";
}

ImpedanceData read_csv(std::istream& in) {
    ImpedanceData data;
    bool have_header = false;
    std::vector<Real> ks;
    std::vector<Complex> vs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream tokens(line.substr(1));
            std::string token;
            while (tokens >> token) {
                const auto eq = token.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
                try {
                    if (key == "n") data.n = std::stoi(value);
                    else if (key == "a") data.a = std::stod(value);
                    else if (key == "b") data.b = std::stod(value);
                } catch (const std::exception&) {
                    throw FormatError("bad header value '" + token + "' on line " + std::to_string(line_no));
                }
                if (key == "n" || key == "a" || key == "b") have_header = true;
            }
            continue;
        }
        if (line.rfind("k,", 0) == 0) continue;  // column names
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        Real k, re, im;
        if (!(row >> k >> re >> im)) throw FormatError("malformed data row on line " + std::to_string(line_no));
        ks.push_back(k);
        vs.emplace_back(re, im);
    }
    if (!have_header) throw FormatError("impedance data lacks the '# n=... a=... b=...' header");
    data.frequencies = Eigen::Map<RealArray>(ks.data(), static_cast<Eigen::Index>(ks.size()));
    data.values = Eigen::Map<ComplexArray>(vs.data(), static_cast<Eigen::Index>(vs.size()));
    validate(data);
    return data;
}

}  // namespace helmtrace::forward
