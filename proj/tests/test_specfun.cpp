#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "helmtrace/specfun.hpp"
#include "helmtrace/stats.hpp"

using namespace helmtrace;
namespace sf = helmtrace::specfun;

namespace {

struct Reference {
    int n;
    Complex z, j, y;
};

const Reference reference_table[] = {
#include "oracles/bessel_reference.inc"
};

std::vector<Real> log_grid(Real lo, Real hi, int count) {
    std::vector<Real> out(count);
    for (int i = 0; i < count; ++i)
        out[i] = lo * std::pow(hi / lo, Real(i) / (count - 1));
    return out;
}

}  // namespace

TEST_CASE("values match high-precision reference") {
    int checked = 0;
    for (const auto& ref : reference_table) {
        DOCTEST_INFO("n=" << ref.n << " z=" << ref.z);
        sf::CylinderFunctionValue<Real> v;
        const bool overflow = std::abs(ref.y) > 1e300 || !std::isfinite(std::abs(ref.y));
        if (overflow) {
            CHECK_THROWS_AS(sf::eval_cylinder(ref.n, ref.z), DomainError);
            continue;
        }
        try {
            v = sf::eval_cylinder(ref.n, ref.z);
        } catch (const DomainError&) {
            // Y_n beyond double range at tiny |z|
            CHECK(std::abs(ref.y) > 1e290);
            continue;
        }
        // Complex arguments are compared against the combined magnitude because
        // J and Y individually can sit near a zero there.
        const bool real_axis = ref.z.imag() == 0.0 && ref.z.real() > 0.0;
        const Real scale_j = real_axis ? std::abs(ref.j) : std::abs(ref.j) + std::abs(ref.y);
        const Real scale_y = real_axis ? std::abs(ref.y) : std::abs(ref.j) + std::abs(ref.y);
        CHECK(std::abs(v.j - ref.j) <= 1e-12 * scale_j + 1e-300);
        CHECK(std::abs(v.y - ref.y) <= (real_axis ? 1e-12 : 4e-12) * scale_y);
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("series leading terms") {
    // J_0 -> 1 as z -> 0+
    CHECK(sf::eval_cylinder(0, Complex(1e-8, 0)).j.real() == doctest::Approx(1.0).epsilon(1e-15));
    // J_1(z) ~ z/2 with relative error bounded by z^2/8
    const Real z = 0.01;
    const auto v = sf::eval_cylinder(1, Complex(z, 0));
    CHECK(std::abs(v.j.real() - z / 2) / (z / 2) <= z * z / 8);
}

TEST_CASE("Wronskian identities on a log grid") {
    for (int n = 0; n <= 8; ++n) {
        for (Real x : log_grid(1e-3, 1e4, 1000)) {
            const auto v = sf::eval_cylinder(n, Complex(x, 0));
            const Complex w = x * (v.j * v.yp - v.jp * v.y);
            REQUIRE(std::abs(w - 2.0 / pi) <= 1e-12 * (1 + x));
            const Complex wh = x * (v.j * v.hp() - v.jp * v.h());
            REQUIRE(std::abs(wh - 2.0 * I / pi) <= 1e-12 * (1 + x));
        }
    }
}

TEST_CASE("Wronskian holds off the real axis and in the reflected half") {
    const Complex pts[] = {{2.0, 1.0}, {10.0, 3.0}, {45.0, 2.0}, {-3.0, 2.0},
                           {-40.0, 1.0}, {-0.5, 0.0}, {-7.0, 0.0}, {0.0, 4.0}};
    for (int n : {0, 1, 3, 8, 20}) {
        for (Complex z : pts) {
            DOCTEST_INFO("n=" << n << " z=" << z);
            const auto v = sf::eval_cylinder(n, z);
            const Complex w = z * (v.j * v.yp - v.jp * v.y);
            const Real scale = std::abs(z) * (std::abs(v.j) + std::abs(v.jp))
                               * (std::abs(v.y) + std::abs(v.yp));
            CHECK(std::abs(w - 2.0 / pi) <= 1e-13 * (1 + scale));
        }
    }
}

TEST_CASE("derivative matches the symmetric recurrence") {
    for (int n = 1; n <= 10; ++n) {
        for (Real x : {0.2, 2.5, 3.5, 17.0, 29.0, 31.0, 250.0}) {
            const auto lo = sf::eval_cylinder(n - 1, Complex(x, 0));
            const auto mid = sf::eval_cylinder(n, Complex(x, 0));
            const auto hi = sf::eval_cylinder(n + 1, Complex(x, 0));
            const Complex jp = (lo.j - hi.j) / 2.0;
            const Complex yp = (lo.y - hi.y) / 2.0;
            CHECK(std::abs(mid.jp - jp) <= 1e-13 * (std::abs(lo.j) + std::abs(hi.j)));
            CHECK(std::abs(mid.yp - yp) <= 1e-13 * (std::abs(lo.y) + std::abs(hi.y)));
        }
    }
}

TEST_CASE("branches agree across their switch points") {
    namespace d = sf::detail;
    for (int n : {0, 1, 4, 9}) {
        for (Real x = 2.6; x <= 3.4; x += 0.1) {
            for (Real yim : {0.0, 0.7}) {
                const Complex z(x, yim);
                const auto a = d::series_pair<Real>(n, z);
                const auto b = d::miller_pair<Real>(n, z);
                const Real s = std::abs(a.j0) + std::abs(a.y0);
                CHECK(std::abs(a.j0 - b.j0) <= 1e-12 * s);
                CHECK(std::abs(a.y0 - b.y0) <= 1e-12 * s);
            }
        }
        for (Real x = 26.0; x <= 36.0; x += 0.5) {
            const Complex z(x, 0.3);
            const auto a = d::miller_pair<Real>(n, z);
            const auto b = d::asymptotic_pair<Real>(n, z);
            const Real s = std::abs(a.j0) + std::abs(a.y0);
            CHECK(std::abs(a.j0 - b.j0) <= 1e-12 * s);
            CHECK(std::abs(a.y0 - b.y0) <= 1e-12 * s);
            CHECK(std::abs(a.h1 - b.h1) <= 1e-12 * (std::abs(a.j1) + std::abs(a.y1)));
        }
    }
}

TEST_CASE("long double instantiation agrees with double") {
    for (int n : {0, 2, 7}) {
        for (Real x : {0.9, 6.0, 44.0}) {
            const auto d = sf::eval_cylinder<Real>(n, Complex(x, 0));
            const auto l = sf::eval_cylinder<long double>(n, std::complex<long double>(x, 0));
            CHECK(std::abs(d.h() - Complex(l.h())) <= 1e-14 * std::abs(l.h()));
        }
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(sf::eval_cylinder(0, Complex(0, 0)), DomainError);
    CHECK_THROWS_AS(sf::eval_cylinder(0, Complex(1, -1e-3)), DomainError);
    CHECK_THROWS_AS(sf::eval_cylinder(65, Complex(1, 0)), DomainError);
    CHECK_THROWS_AS(sf::eval_cylinder(-1, Complex(1, 0)), DomainError);
    CHECK_THROWS_AS(sf::free_impedance(0, 0.0, 1.0), DomainError);
}

TEST_CASE("Hankel fast path matches the full evaluation") {
    for (int n : {0, 1, 4, 12}) {
        for (Real x : {1e-7, 0.4, 5.0, 29.9, 30.0, 30.1, 200.0, 5000.0}) {
            const auto [h, hp] = sf::hankel1<Real>(n, Complex(x, 0));
            const Complex ratio = sf::hankel_log_derivative(n, x);
            CHECK(std::abs(ratio - hp / h) <= 1e-13 * std::abs(hp / h));
        }
    }
}

TEST_CASE("free impedance") {
    SUBCASE("conjugate symmetry in k") {
        for (int n : {0, 1, 2, 4}) {
            for (Real k : {0.01, 1.0, 5.0, 160.0}) {
                const Complex plus = sf::free_impedance(n, k, 1.5);
                const Complex minus = sf::free_impedance(n, -k, 1.5);
                CHECK(minus == std::conj(plus));
            }
        }
        // n=2, k=5, r=1.5 from the underlying cylinder functions
        const auto v = sf::eval_cylinder(2, Complex(7.5, 0));
        const Complex direct = v.hp() / (I * v.h()) + 1.0 / (2.0 * I * 7.5);
        CHECK(std::abs(sf::free_impedance(2, 5.0, 1.5) - direct) <= 1e-14);
        CHECK(std::abs(sf::free_impedance(2, -5.0, 1.5) - std::conj(direct)) <= 1e-14);
    }
    SUBCASE("tends to one like (kr)^-2") {
        std::vector<Real> xs, es;
        for (Real x : log_grid(20, 2e4, 12)) {
            xs.push_back(x);
            es.push_back(std::abs(sf::free_impedance(0, x, 1.0) - 1.0));
        }
        CHECK(stats::loglog_slope(xs, es) == doctest::Approx(-2.0).epsilon(0.05));
    }
}

TEST_CASE("small-argument ratio bound") {
    for (int n = 0; n <= 4; ++n) {
        const Real c = sf::small_argument_constant(n);
        DOCTEST_INFO("n=" << n << " C_n=" << c);
        CHECK(c > 1.0);
        for (Real z : log_grid(1e-6, c, 200))
            CHECK(std::abs(sf::hankel_log_derivative(n, z)) <= 4.0 * (n + 1) / z);
    }
}

TEST_CASE("large-argument ratio slope") {
    for (int n : {0, 1, 4}) {
        std::vector<Real> xs, es;
        for (Real x : log_grid(10, 1e4, 30)) {
            xs.push_back(x);
            es.push_back(std::abs(sf::hankel_log_derivative(n, x) + 1.0 / (2 * x) - I));
        }
        CHECK(stats::loglog_slope(xs, es) == doctest::Approx(-2.0).epsilon(0.05));
    }
}
