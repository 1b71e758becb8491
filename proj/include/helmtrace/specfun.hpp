#ifndef HELMTRACE_SPECFUN_HPP
#define HELMTRACE_SPECFUN_HPP

// Integer-order Bessel and Hankel functions of complex argument in the closed
// upper half-plane, plus the outgoing-wave impedance built from them.
//
// Convention: H_n is the Hankel function of the FIRST kind, H_n = J_n + i Y_n,
// so that sqrt(r) H_n(kr) is the outgoing wave for k > 0.
//
// Evaluation regions (after folding Re z < 0 onto the first quadrant):
//   |z| <= 3        ascending series for J_n and Y_n
//   3 < |z| < 30    Miller backward recurrence for J, Neumann series for Y_0, Y_1
//   |z| >= 30       Hankel asymptotic expansion for orders 0 and 1, then recurrence
// Y_n and H_n are always carried upward from orders 0 and 1 (dominant direction).

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "helmtrace/types.hpp"

namespace helmtrace::specfun {

inline constexpr int max_order = 64;

template <typename T>
struct CylinderFunctionValue {
    std::complex<T> z;
    int n = 0;
    std::complex<T> j;   // J_n(z)
    std::complex<T> y;   // Y_n(z)
    std::complex<T> jp;  // J_n'(z)
    std::complex<T> yp;  // Y_n'(z)

    std::complex<T> h() const { return j + std::complex<T>(0, 1) * y; }
    std::complex<T> hp() const { return jp + std::complex<T>(0, 1) * yp; }
};

namespace detail {

template <typename T>
struct OrderPair {
    std::complex<T> j0, j1;  // J_n, J_{n+1}
    std::complex<T> y0, y1;  // Y_n, Y_{n+1}
    std::complex<T> h0, h1;  // H_n, H_{n+1}
};

template <typename T>
inline constexpr T euler_gamma = std::numbers::egamma_v<T>;

template <typename T>
inline constexpr T series_radius = T(3);

template <typename T>
inline constexpr T asymptotic_radius = T(30);

// Principal log with the sign of a zero imaginary part forced to +0, which puts
// the negative real axis on the upper side of the cut.
template <typename T>
std::complex<T> upper_log(std::complex<T> z) {
    if (z.imag() == T(0)) z = {z.real(), T(0)};
    return std::log(z);
}

template <typename T>
T digamma_int(int m) {
    T s = -euler_gamma<T>;
    for (int j = 1; j < m; ++j) s += T(1) / T(j);
    return s;
}

// Ascending series for J_n, Y_n.
template <typename T>
void series_jy(int n, std::complex<T> z, std::complex<T>& jn, std::complex<T>& yn) {
    using C = std::complex<T>;
    const T eps = std::numeric_limits<T>::epsilon();
    const C half = z / T(2);
    const C q = half * half;

    T fact_n = 1;
    for (int i = 2; i <= n; ++i) fact_n *= T(i);

    C c = T(1) / fact_n;  // (-q)^k / (k! (n+k)!)
    C sum_j = c;
    T psi_a = digamma_int<T>(1);
    T psi_b = digamma_int<T>(n + 1);
    C sum_psi = (psi_a + psi_b) * c;
    for (int k = 0; k < 400; ++k) {
        c *= -q / (T(k + 1) * T(n + k + 1));
        psi_a += T(1) / T(k + 1);
        psi_b += T(1) / T(n + k + 1);
        sum_j += c;
        sum_psi += (psi_a + psi_b) * c;
        if (std::abs(c) * (T(1) + std::abs(psi_a + psi_b)) <= eps * std::abs(sum_j) * T(1e-2)
            && std::abs(c) <= eps * std::abs(sum_psi) * T(1e-2))
            break;
    }
    const C half_n = std::pow(half, n);
    jn = half_n * sum_j;

    C finite = 0;
    if (n > 0) {
        T fact = 1;
        for (int i = 2; i <= n - 1; ++i) fact *= T(i);
        C term = fact;  // (n-k-1)!/k! q^k
        finite = term;
        for (int k = 0; k + 1 < n; ++k) {
            term *= q / (T(k + 1) * T(n - k - 1));
            finite += term;
        }
        finite /= half_n;
    }
    const T inv_pi = T(1) / std::numbers::pi_v<T>;
    yn = -inv_pi * finite + T(2) * inv_pi * upper_log(half) * jn - inv_pi * half_n * sum_psi;
}

// Miller backward recurrence. Returns unnormalized J_0..J_top in f.
template <typename T>
void miller_raw(int top, std::complex<T> z, std::vector<std::complex<T>>& f) {
    using C = std::complex<T>;
    const T az = std::abs(z);
    const T n0 = std::max(T(top + 1), std::ceil(az));
    int m = static_cast<int>(n0 + 24 + std::ceil(std::sqrt(T(40) * n0)));
    if (m % 2) ++m;
    f.assign(static_cast<std::size_t>(m) + 1, C(0));
    C next = 0;
    C cur = T(1e-30);
    f[m] = cur;
    const C two_over_z = T(2) / z;
    for (int k = m; k >= 1; --k) {
        C prev = T(k) * two_over_z * cur - next;
        next = cur;
        cur = prev;
        f[k - 1] = cur;
        if (std::abs(cur) > T(1e200)) {
            for (int i = k - 1; i <= m; ++i) f[i] *= T(1e-200);
            cur *= T(1e-200);
            next *= T(1e-200);
        }
    }
}

template <typename T>
void asymptotic_h(int nu, std::complex<T> z, bool want_h2, std::complex<T>& h1,
                  std::complex<T>& h2) {
    using C = std::complex<T>;
    const T eps = std::numeric_limits<T>::epsilon();
    const T mu = T(4 * nu * nu);
    const C iz = C(0, 1) / z;
    C s1 = 1, s2 = 1;
    C p1 = 1, p2 = 1;  // (i/z)^k and (-i/z)^k
    T a = 1;
    T last = std::numeric_limits<T>::infinity();
    for (int k = 1; k < 200; ++k) {
        const T odd = T(2 * k - 1);
        a *= (mu - odd * odd) / (T(8) * T(k));
        p1 *= iz;
        p2 *= -iz;
        const C t1 = a * p1;
        const T mag = std::abs(t1);
        if (mag > last) break;
        s1 += t1;
        if (want_h2) s2 += a * p2;
        last = mag;
        if (mag <= eps * T(1e-2) * std::abs(s1)) break;
    }
    const T x = z.real(), yv = z.imag();
    const C amp = std::sqrt(T(2) / (std::numbers::pi_v<T> * z));
    // e^{-i(nu pi/2 + pi/4)}
    const T r2 = std::sqrt(T(0.5));
    const C phase = nu == 0 ? C(r2, -r2) : C(-r2, -r2);
    const C eiz = std::exp(-yv) * C(std::cos(x), std::sin(x));
    h1 = amp * eiz * phase * s1;
    if (want_h2) {
        const C emiz = std::exp(yv) * C(std::cos(x), -std::sin(x));
        h2 = amp * emiz * std::conj(phase) * s2;
    }
}

template <typename T>
void carry_up(int n, std::complex<T> z, std::complex<T> v0, std::complex<T> v1,
              std::complex<T>& vn, std::complex<T>& vn1) {
    // f_0, f_1 -> f_n, f_{n+1} by the three-term recurrence
    const std::complex<T> two_over_z = T(2) / z;
    for (int k = 1; k <= n; ++k) {
        const std::complex<T> v2 = T(k) * two_over_z * v1 - v0;
        v0 = v1;
        v1 = v2;
    }
    vn = v0;
    vn1 = v1;
}

template <typename T>
OrderPair<T> series_pair(int n, std::complex<T> z) {
    const std::complex<T> i1(0, 1);
    OrderPair<T> out;
    series_jy(n, z, out.j0, out.y0);
    series_jy(n + 1, z, out.j1, out.y1);
    out.h0 = out.j0 + i1 * out.y0;
    out.h1 = out.j1 + i1 * out.y1;
    return out;
}

template <typename T>
OrderPair<T> miller_pair(int n, std::complex<T> z) {
    using C = std::complex<T>;
    const C i1(0, 1);
    OrderPair<T> out;
    std::vector<C> f;
    miller_raw(n + 1, z, f);
    const int m = static_cast<int>(f.size()) - 1;
    // normalization: J_0 + 2 sum (-i)^k J_k = exp(-iz)
    C s = f[0];
    C rot = 1;
    for (int k = 1; k <= m; ++k) {
        rot *= -i1;
        s += T(2) * rot * f[k];
    }
    const C scale = std::exp(-i1 * z) / s;
    for (auto& v : f) v *= scale;
    const C lg = upper_log(z / T(2)) + euler_gamma<T>;
    C sum0 = 0, sum1 = 0;
    for (int k = 1; 2 * k + 1 <= m; ++k) {
        const T sgn = (k % 2) ? T(-1) : T(1);
        sum0 += sgn * f[2 * k] / T(k);
        sum1 += sgn * T(2 * k + 1) * f[2 * k + 1] / (T(k) * T(k + 1));
    }
    const T inv_pi = T(1) / std::numbers::pi_v<T>;
    const C y0 = T(2) * inv_pi * lg * f[0] - T(4) * inv_pi * sum0;
    const C y1 = -T(2) * f[0] * inv_pi / z + T(2) * inv_pi * (lg - T(1)) * f[1]
                 - T(2) * inv_pi * sum1;
    out.j0 = f[n];
    out.j1 = f[n + 1];
    carry_up(n, z, y0, y1, out.y0, out.y1);
    out.h0 = out.j0 + i1 * out.y0;
    out.h1 = out.j1 + i1 * out.y1;
    return out;
}

template <typename T>
OrderPair<T> asymptotic_pair(int n, std::complex<T> z) {
    using C = std::complex<T>;
    const C i1(0, 1);
    OrderPair<T> out;
    C h10, h20, h11, h21;
    asymptotic_h(0, z, true, h10, h20);
    asymptotic_h(1, z, true, h11, h21);
    const C j0 = (h10 + h20) / T(2), j1 = (h11 + h21) / T(2);
    const C y0 = (h10 - h20) / (T(2) * i1), y1 = (h11 - h21) / (T(2) * i1);
    carry_up(n, z, h10, h11, out.h0, out.h1);
    if (z.imag() == T(0) && T(n + 1) < std::abs(z)) {
        carry_up(n, z, y0, y1, out.y0, out.y1);
        carry_up(n, z, j0, j1, out.j0, out.j1);
    } else {
        // Upward recurrence for J is unstable past the turning point, and off
        // the real axis J_n, Y_n are both near the decaying H^(2) mode.
        std::vector<C> f;
        miller_raw(n + 1, z, f);
        const C scale = std::abs(j0) >= std::abs(j1) ? j0 / f[0] : j1 / f[1];
        out.j0 = f[n] * scale;
        out.j1 = f[n + 1] * scale;
        if (z.imag() == T(0)) {
            carry_up(n, z, y0, y1, out.y0, out.y1);
        } else {
            out.y0 = i1 * (out.j0 - out.h0);
            out.y1 = i1 * (out.j1 - out.h1);
        }
    }
    return out;
}

// All six values for orders n, n+1 with Re z >= 0, Im z >= 0, z != 0.
template <typename T>
OrderPair<T> first_quadrant(int n, std::complex<T> z) {
    const T az = std::abs(z);
    if (az <= series_radius<T>) return series_pair(n, z);
    if (az < asymptotic_radius<T>) return miller_pair(n, z);
    return asymptotic_pair(n, z);
}

template <typename T>
void check_arguments(int n, std::complex<T> z) {
    if (n < 0 || n > max_order)
        throw DomainError("cylinder function order " + std::to_string(n) + " outside [0, 64]");
    if (z == std::complex<T>(0))
        throw DomainError("cylinder functions Y_n, H_n are singular at z = 0");
    if (z.imag() < T(0) || std::isnan(z.real()) || std::isnan(z.imag()))
        throw DomainError("cylinder functions evaluated only for Im z >= 0");
}

template <typename T>
OrderPair<T> order_pair(int n, std::complex<T> z) {
    using C = std::complex<T>;
    check_arguments(n, z);
    if (z.real() >= T(0)) return first_quadrant(n, z);

    // Reflection: z = -conj(zeta) with zeta in the first quadrant.
    //   J_m(z) = (-1)^m conj J_m(zeta)
    //   Y_m(z) = (-1)^m (conj Y_m(zeta) + 2i conj J_m(zeta))
    const C zeta = -std::conj(z);
    const OrderPair<T> p = first_quadrant(n, zeta);
    const C i1(0, 1);
    const T s0 = (n % 2) ? T(-1) : T(1);
    OrderPair<T> out;
    out.j0 = s0 * std::conj(p.j0);
    out.j1 = -s0 * std::conj(p.j1);
    out.y0 = s0 * (std::conj(p.y0) + T(2) * i1 * std::conj(p.j0));
    out.y1 = -s0 * (std::conj(p.y1) + T(2) * i1 * std::conj(p.j1));
    out.h0 = out.j0 + i1 * out.y0;
    out.h1 = out.j1 + i1 * out.y1;
    return out;
}

}  // namespace detail

/// J_n, Y_n and their derivatives at z, Im z >= 0, z != 0, 0 <= n <= 64.
/// Throws DomainError outside that domain or if Y_n overflows.
template <typename T = Real>
CylinderFunctionValue<T> eval_cylinder(int n, std::complex<T> z) {
    const auto p = detail::order_pair<T>(n, z);
    CylinderFunctionValue<T> v;
    v.z = z;
    v.n = n;
    v.j = p.j0;
    v.y = p.y0;
    const std::complex<T> nz = T(n) / z;
    v.jp = nz * p.j0 - p.j1;
    v.yp = nz * p.y0 - p.y1;
    if (!std::isfinite(std::abs(v.y)) || !std::isfinite(std::abs(v.yp)))
        throw DomainError("Y_" + std::to_string(n) + " overflows at |z| = "
                          + std::to_string(static_cast<double>(std::abs(z))));
    return v;
}

/// H_n(z) and H_n'(z). In the asymptotic region H_n is carried directly, so it
/// stays accurate where J_n and i Y_n nearly cancel.
template <typename T = Real>
std::pair<std::complex<T>, std::complex<T>> hankel1(int n, std::complex<T> z) {
    const auto p = detail::order_pair<T>(n, z);
    const std::complex<T> hp = (T(n) / z) * p.h0 - p.h1;
    return {p.h0, hp};
}

/// H_n'(x) / H_n(x) for real x > 0. Fast path used inside the inversion march.
Complex hankel_log_derivative(int n, Real x);

/// The impedance of the potential-free outgoing wave sqrt(r) H_n(kr):
///   H_n'(kr) / (i H_n(kr)) + 1 / (2ikr).
/// Negative k is folded: free_impedance(n, -k, r) = conj(free_impedance(n, k, r)).
Complex free_impedance(int n, Real k, Real r);

/// Largest C on a log grid of (0, z_max] such that |H_n'/H_n| <= 4(n+1)/|z| for
/// every grid point z <= C. Returns 0 if the bound already fails at the first point.
Real small_argument_constant(int n, Real z_min = 1e-6, Real z_max = 100.0,
                             int points = 4000);

}  // namespace helmtrace::specfun

#endif  // HELMTRACE_SPECFUN_HPP
