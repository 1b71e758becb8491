#include "helmtrace/specfun.hpp"

#include <cmath>

namespace helmtrace::specfun {

Complex hankel_log_derivative(int n, Real x) {
    if (!(x > 0.0)) throw DomainError("hankel_log_derivative needs x > 0");
    if (n < 0 || n > max_order)
        throw DomainError("cylinder function order " + std::to_string(n) + " outside [0, 64]");
    Complex h0, h1;
    if (x >= detail::asymptotic_radius<Real>) {
        Complex unused;
        Complex a0, a1;
        detail::asymptotic_h<Real>(0, Complex(x, 0.0), false, a0, unused);
        detail::asymptotic_h<Real>(1, Complex(x, 0.0), false, a1, unused);
        const Real two_over_x = 2.0 / x;
        for (int k = 1; k <= n; ++k) {
            const Complex a2 = Real(k) * two_over_x * a1 - a0;
            a0 = a1;
            a1 = a2;
        }
        h0 = a0;
        h1 = a1;
    } else {
        const auto p = detail::order_pair<Real>(n, Complex(x, 0.0));
        h0 = p.h0;
        h1 = p.h1;
    }
    return Real(n) / x - h1 / h0;
}

Complex free_impedance(int n, Real k, Real r) {
    if (k == 0.0) throw DomainError("free impedance is undefined at k = 0");
    if (!(r > 0.0)) throw DomainError("free impedance needs r > 0");
    const Real x = std::abs(k) * r;
    const Complex ratio = hankel_log_derivative(n, x);
    // ratio / i + 1 / (2 i x)
    const Complex value = Complex(ratio.imag(), -ratio.real()) + Complex(0.0, -0.5 / x);
    return k > 0.0 ? value : std::conj(value);
}

Real small_argument_constant(int n, Real z_min, Real z_max, int points) {
    const Real bound_coeff = 4.0 * (n + 1);
    const Real step = std::log(z_max / z_min) / (points - 1);
    Real last_ok = 0.0;
    for (int i = 0; i < points; ++i) {
        const Real z = z_min * std::exp(step * i);
        if (std::abs(hankel_log_derivative(n, z)) * z > bound_coeff) break;
        last_ok = z;
    }
    return last_ok;
}

}  // namespace helmtrace::specfun
