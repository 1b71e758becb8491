#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "helmtrace/quadrature.hpp"
#include "helmtrace/stats.hpp"

using namespace helmtrace;
using namespace helmtrace::quadrature;

namespace {

// Closed forms on [0, 1/2] (symbolic integration by parts).
constexpr Real k_log_k = -0.1491433975699931636771540;        // -log2/8 - 1/16
constexpr Real k3_log2_k = 0.01487541569059646999024560;      // 1/512 + log2/128 + log^2 2/64
constexpr Real k2_log_k = -0.04277002141221994344794023;      // -log2/24 - 1/72
constexpr Real k18_log4_k = 3.207616382917247498214258e-8;
// Negative log powers (40-digit quadrature).
constexpr Real k3_logm10_k = 0.140804583272924179559546777141;
constexpr Real k1_logm1_k = -0.118662056447123105305095706472;

Real rel(Real a, Real b) { return std::abs(a - b) / std::abs(b); }

// Plain trapezoid on [-omega, omega] at a fixed spacing, ready to be combined.
FrequencyGrid fine_trapezoid(Real omega, Real spacing) {
    const int n = static_cast<int>(std::lround(2 * omega / spacing)) + 1;
    return trapezoid_grid(omega, n);
}

Real lorentzian(Real k) { return 1 / (1 + k * k); }

}  // namespace

TEST_CASE("trapezoid grid") {
    SUBCASE("three points") {
        const auto g = trapezoid_grid(1, 3);
        REQUIRE(g.size() == 3);
        CHECK(g.nodes[0] == -1.0);
        CHECK(g.nodes[1] == 0.0);
        CHECK(g.nodes[2] == 1.0);
        CHECK(g.weights[0] == 0.5);
        CHECK(g.weights[1] == 1.0);
        CHECK(g.weights[2] == 0.5);
    }
    SUBCASE("minimum size") { CHECK_THROWS_AS(trapezoid_grid(1, 2), DomainError); }
    SUBCASE("experiment grid") {
        const auto g = trapezoid_grid(160, 270);
        REQUIRE(g.size() == 270);
        for (int j = 1; j <= 270; ++j)
            CHECK(g.nodes[j - 1] == doctest::Approx(2 * 160.0 * (j - 1) / 269 - 160).epsilon(1e-15));
        CHECK(g.weights[0] == doctest::Approx(160.0 / 269));
        CHECK(g.weights[1] == doctest::Approx(320.0 / 269));
        CHECK(g.weights.sum() == doctest::Approx(320.0).epsilon(1e-14));
        CHECK_NOTHROW(validate(g));
    }
    SUBCASE("quadratic moment") {
        const auto g = trapezoid_grid(2, 10000);
        CHECK(rel(g.integrate([](Real k) { return k * k; }), 16.0 / 3) <= 1e-7);
    }
}

TEST_CASE("Gauss-Legendre") {
    for (int order : {1, 2, 5, 16, 24, 40}) {
        const auto rule = gauss_legendre(order, 0.0, 3.0);
        CHECK(rule.weights.sum() == doctest::Approx(3.0).epsilon(1e-14));
        for (int p = 0; p <= 2 * order - 1; ++p) {
            const Real exact = std::pow(3.0, p + 1) / (p + 1);
            const Real got = rule.integrate([p](Real x) { return std::pow(x, p); });
            CHECK(rel(got, exact) <= 1e-13);
        }
        for (Eigen::Index i = 1; i < rule.nodes.size(); ++i) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
    }
    CHECK_THROWS_AS(gauss_legendre(0), DomainError);
}

TEST_CASE("graded panels near the log singularity") {
    const auto rule = graded_log_panels(0.5, 40, 16);
    CHECK(rel(rule.integrate([](Real k) { return k * std::log(k); }), k_log_k) <= 1e-12);
    CHECK(rel(rule.integrate([](Real k) { return k; }), 0.125) <= 1e-14);
    CHECK(rel(rule.integrate([](Real k) { return k * k * k * std::pow(std::log(k), 2); }), k3_log2_k) <= 1e-13);
    CHECK_THROWS_AS(graded_log_panels(0.5, 61, 8), DomainError);

    SUBCASE("error decays geometrically in depth") {
        std::vector<Real> depth, err;
        for (int d = 4; d <= 16; d += 2) {
            const auto r = graded_log_panels(0.5, d, 16);
            depth.push_back(d);
            err.push_back(rel(r.integrate([](Real k) { return k * std::log(k); }), k_log_k));
        }
        // the dropped closure panel carries ~ k_min^2 |log k_min|, i.e. about 4^-depth
        for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] < err[i - 1] / 10);
    }
}

TEST_CASE("log moments") {
    CHECK(log_moment(1, 0, 0.5) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(rel(log_moment(1, 1, 0.5), k_log_k) <= 1e-14);
    CHECK(rel(log_moment(2, 1, 0.5), k2_log_k) <= 1e-14);
    CHECK(rel(log_moment(3, 2, 0.5), k3_log2_k) <= 1e-14);
    CHECK(rel(log_moment(18, 4, 0.5), k18_log4_k) <= 1e-13);
    CHECK(rel(log_moment(3, -10, 0.5), k3_logm10_k) <= 1e-13);
    CHECK(rel(log_moment(1, -1, 0.5), k1_logm1_k) <= 1e-13);
}

TEST_CASE("moment-fitted rule") {
    CHECK_THROWS_AS(moment_fitted_rule(LogBasisSpec{}, 20), DomainError);
    MomentFitReport report;
    try {
        report = moment_fitted_rule(LogBasisSpec{}, 35);
    } catch (const IllConditionedError& e) {
        // acceptable outcome: the fit refuses to produce a rule
        MESSAGE("moment fit rejected: " << e.what());
        return;
    }
    MESSAGE("35-node moment fit: max relative residual " << report.max_residual << " at m="
                                                         << report.worst_m << " n=" << report.worst_n
                                                         << ", max |w| " << report.max_abs_weight);
    CHECK(report.max_abs_weight <= 1e3);
    CHECK(report.meets_target == (report.max_residual <= 1e-13));
    CHECK(report.rule.nodes.size() == 35);
    // A low-order member is integrated accurately even when the whole basis is not.
    CHECK(rel(report.rule.integrate([](Real k) { return k; }), 0.125) <= 1e-6);
    CHECK(rel(report.rule.integrate([](Real k) { return k * k * std::log(k); }), k2_log_k) <= 1e-6);
}

TEST_CASE("Richardson coefficients") {
    const auto c1 = richardson_coefficients(1, 2);
    CHECK(c1[0] == doctest::Approx(-1.0));
    CHECK(c1[1] == doctest::Approx(2.0));
    const auto c2 = richardson_coefficients(2, 2);
    CHECK(c2.sum() == doctest::Approx(1.0));
    CHECK_THROWS_AS(richardson_coefficients(5, 2), IllConditionedError);
    CHECK_THROWS_AS(richardson_coefficients(1, 1), DomainError);
    CHECK_THROWS_AS(richardson_coefficients(4, 1.05), IllConditionedError);
    CHECK_NOTHROW(richardson_coefficients(1, 1.5));
}

TEST_CASE("Richardson combination") {
    SUBCASE("identity at zero levels") {
        const auto base = trapezoid_grid(3, 31);
        const auto same = richardson_combine(base, 0, 2);
        CHECK((same.nodes == base.nodes).all());
        CHECK((same.weights == base.weights).all());
    }
    SUBCASE("weight sum over the merged support") {
        const Real omega = 5;
        const auto g = richardson_combine(fine_trapezoid(omega, 0.1), 1, 2);
        CHECK_NOTHROW(validate(g));
        CHECK(g.support() == doctest::Approx(10.0));
        CHECK(g.weights.sum() == doctest::Approx(6 * omega).epsilon(1e-13));
    }
    SUBCASE("inverse-square tail cancels exactly") {
        for (Real omega : {5.0, 20.0, 80.0}) {
            GridOptions o;
            o.k_cut = 1;
            o.omega = 2 * omega;
            o.n_freq = static_cast<int>(40 * omega);
            const auto g = make_grid(o);
            const Real combined = g.integrate([](Real k) { return std::abs(k) < 1 ? 0.0 : 1 / (k * k); });
            CHECK(combined == doctest::Approx(2.0).epsilon(1e-10));
        }
    }
    SUBCASE("Lorentzian at omega = 20") {
        const auto plain = fine_trapezoid(20, 0.02);
        const auto combined = richardson_combine(plain, 1, 2);
        const Real e_plain = std::abs(plain.integrate(lorentzian) - pi);
        const Real e_comb = std::abs(combined.integrate(lorentzian) - pi);
        CHECK(e_comb * 100 <= e_plain);
    }
    SUBCASE("tail slopes") {
        for (int levels : {1, 2}) {
            std::vector<Real> om, err;
            for (Real omega : {8.0, 11.0, 16.0, 23.0, 32.0}) {
                const auto g = richardson_combine(fine_trapezoid(omega, 0.01), levels, 2);
                om.push_back(omega);
                err.push_back(std::abs(g.integrate(lorentzian) - pi));
            }
            const Real slope = stats::loglog_slope(om, err);
            DOCTEST_INFO("levels=" << levels << " slope=" << slope);
            if (levels == 1) CHECK(slope == doctest::Approx(-3.0).epsilon(0.1));
            else CHECK(slope == doctest::Approx(-5.0).epsilon(0.1));
        }
    }
}

TEST_CASE("accelerated grid") {
    const auto g = make_grid(GridOptions{});
    CHECK_NOTHROW(validate(g));
    CHECK(g.kind == GridKind::graded_log);
    CHECK(g.support() == doctest::Approx(160.0));
    CHECK(g.nodes[g.size() - 1] < 160.0);
    CHECK(g.nodes[g.size() - 1] > 159.0);
    // exactly one k = 0 node
    int zeros = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) zeros += g.nodes[i] == 0.0;
    CHECK(zeros == 1);
    // Lorentzian: graded grid plus one level beats plain truncation at the same support
    const Real e = std::abs(g.integrate(lorentzian) - pi);
    CHECK(e < 1e-6);

    SUBCASE("log-singular integrand") {
        // |k| log|k| near zero plus a smooth bulk; exact over [-1/2, 1/2]
        GridOptions o;
        o.richardson_levels = 0;
        o.omega = 4;
        o.n_freq = 64;
        o.graded_depth = 30;
        o.graded_order = 12;
        const auto h = make_grid(o);
        const Real v = h.integrate([](Real k) {
            const Real a = std::abs(k);
            return a == 0 ? 0.0 : (a <= 0.5 ? a * std::log(a) : 0.0);
        });
        CHECK(rel(v, 2 * k_log_k) <= 1e-12);
    }
    SUBCASE("trapezoid kind with Richardson keeps the outer spacing") {
        GridOptions o;
        o.kind = GridKind::trapezoid;
        o.omega = 40;
        o.n_freq = 161;
        const auto t = make_grid(o);
        CHECK_NOTHROW(validate(t));
        CHECK(t.support() == doctest::Approx(40.0));
        CHECK(t.nodes[1] - t.nodes[0] == doctest::Approx(0.5));
    }
    SUBCASE("moment-fitted kind reports its fallback") {
        GridOptions o;
        o.kind = GridKind::moment_fitted;
        o.omega = 20;
        o.n_freq = 64;
        try {
            const auto m = make_grid(o);
            CHECK_NOTHROW(validate(m));
            if (m.kind != GridKind::moment_fitted) CHECK(!m.note.empty());
        } catch (const IllConditionedError&) {
        }
    }
}

TEST_CASE("kind names round-trip") {
    for (auto k : {GridKind::trapezoid, GridKind::graded_log, GridKind::moment_fitted})
        CHECK(grid_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(grid_kind_from_string("simpson"), FormatError);
}

TEST_CASE("CSV output") {
    std::ostringstream out;
    write_csv(out, trapezoid_grid(1, 5));
    const std::string s = out.str();
    CHECK(s.rfind("# kind=trapezoid", 0) == 0);
    CHECK(s.find("\n-1,0.25\n") != std::string::npos);
    CHECK(s.find("\n1,0.25\n") != std::string::npos);
}
