#include "helmtrace/inversion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "helmtrace/parallel.hpp"
#include "helmtrace/specfun.hpp"
#include "helmtrace/stats.hpp"

namespace helmtrace::inversion {

namespace {

constexpr Real trace_constant = 4 / pi;

bool same_node(Real x, Real y) { return std::abs(x - y) <= 1e-12 * std::max<Real>(1, std::abs(x)); }

// k > 0 rows with folded weights w(k) + w(-k), plus the k = 0 weight.
struct FoldedRows {
    std::vector<Real> k;
    std::vector<Real> weight;
    std::vector<Eigen::Index> data_index;  // position of +k in the data
    Real zero_weight = 0;
    Real total_weight = 0;
};

FoldedRows fold(const forward::ImpedanceData& data, const quadrature::FrequencyGrid& grid) {
    quadrature::validate(grid);
    FoldedRows rows;
    const Eigen::Index m = grid.size();
    Eigen::Index d = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Real k = grid.nodes[i];
        rows.total_weight += grid.weights[i];
        if (k == 0) {
            rows.zero_weight = grid.weights[i];
            continue;
        }
        if (d >= data.frequencies.size() || !same_node(k, data.frequencies[d])) {
            std::ostringstream msg;
            msg << "data frequencies do not match the grid's nonzero nodes (grid node " << k << ")";
            throw DomainError(msg.str());
        }
        if (k > 0) {
            rows.k.push_back(k);
            rows.weight.push_back(grid.weights[i] + grid.weights[m - 1 - i]);
            rows.data_index.push_back(d);
        }
        ++d;
    }
    if (d != data.frequencies.size()) throw DomainError("data has frequencies beyond the grid");
    return rows;
}

Real trace_rate(Real folded_defect_sum, Real q, const FoldedRows& rows) {
    if (!(q > -1)) throw DomainError("trace formula needs q > -1");
    return (1 + q) * trace_constant * (folded_defect_sum + (1 - std::sqrt(1 + q)) * rows.total_weight);
}

Real folded_sum(const std::vector<Real>& weight, const ComplexArray& w) {
    Real s = 0;
    for (std::size_t j = 0; j < weight.size(); ++j) s += weight[j] * w[static_cast<Eigen::Index>(j)].real();
    return s;
}

ImpedanceState unfold(const forward::ImpedanceData& data, const FoldedRows& rows, const ComplexArray& w,
                      const ComplexArray& free, Real r) {
    ImpedanceState state;
    state.r = r;
    state.n = data.n;
    state.frequencies = data.frequencies;
    state.phis.resize(data.frequencies.size());
    const Eigen::Index m = data.frequencies.size();
    for (std::size_t j = 0; j < rows.k.size(); ++j) {
        const Eigen::Index idx = rows.data_index[j];
        const Complex phi = w[static_cast<Eigen::Index>(j)] + free[static_cast<Eigen::Index>(j)];
        state.phis[idx] = phi;
        state.phis[m - 1 - idx] = std::conj(phi);
    }
    return state;
}

void check_initial_defect(const FoldedRows& rows, const ComplexArray& w, Diagnostics& diag) {
    std::vector<Real> ks, ws;
    Real largest = 0;
    for (std::size_t j = 0; j < rows.k.size(); ++j) {
        if (rows.k[j] > 0.5) continue;
        const Real mag = std::abs(w[static_cast<Eigen::Index>(j)]);
        largest = std::max(largest, mag);
        if (mag > 0) {
            ks.push_back(rows.k[j]);
            ws.push_back(mag);
        }
    }
    if (ks.size() < 3 || largest <= 1e-8) return;
    diag.initial_defect_slope = stats::loglog_slope(ks, ws);
    if (diag.initial_defect_slope < 0.8) {
        diag.initial_check_passed = false;
        std::ostringstream msg;
        msg << "initial data defect |phi - phi_free| scales like k^" << diag.initial_defect_slope
            << " near k = 0 (expected k^1)";
        diag.warning = msg.str();
    }
}

ReconstructionResult march(const forward::ImpedanceData& data, const ReconstructionConfig& cfg, Scheme scheme) {
    const auto t0 = std::chrono::steady_clock::now();
    if (data.n != cfg.n) throw DomainError("data mode index differs from the configured one");
    if (std::abs(data.a - cfg.a) > 1e-12 * std::abs(cfg.a))
        throw DomainError("data radius differs from the configured inner radius");
    const Real length = cfg.b - cfg.a;
    if (!(length > 0)) throw DomainError("need a < b");
    if (!(cfg.h > 0) || cfg.h > length / 100) throw DomainError("spatial step must satisfy 0 < h <= (b-a)/100");
    const int steps = static_cast<int>(std::lround(length / cfg.h));
    const Real h = length / steps;

    const FoldedRows rows = fold(data, cfg.grid);
    const auto count = static_cast<Eigen::Index>(rows.k.size());

    ComplexArray w(count), free(count);
    for (Eigen::Index j = 0; j < count; ++j) {
        free[j] = specfun::free_impedance(cfg.n, rows.k[static_cast<std::size_t>(j)], cfg.a);
        w[j] = data.values[rows.data_index[static_cast<std::size_t>(j)]] - free[j];
    }

    ReconstructionResult result;
    Diagnostics& diag = result.diagnostics;
    diag.steps = steps;
    diag.h_effective = h;
    diag.marched_frequencies = static_cast<int>(count);
    check_initial_defect(rows, w, diag);

    result.radii.resize(steps + 1);
    result.q_hat.resize(steps + 1);
    result.q_prime.resize(steps + 1);
    for (int l = 0; l <= steps; ++l) result.radii[l] = l == steps ? cfg.b : cfg.a + h * l;

    std::optional<int> snapshot_step;
    if (cfg.snapshot_radius) {
        const Real s = std::round((*cfg.snapshot_radius - cfg.a) / h);
        if (s < 0 || s > steps) throw DomainError("snapshot radius outside [a, b]");
        snapshot_step = static_cast<int>(s);
        if (*snapshot_step == 0) result.snapshot = unfold(data, rows, w, free, cfg.a);
    }

    std::vector<unsigned char> flip(static_cast<std::size_t>(count)), ambiguous(flip.size());
    RealArray row_phi(count), row_w(count);
    WorkerPool pool(cfg.threads);

    Real q = cfg.known_potential ? cfg.known_potential(cfg.a) : 0.0;
    for (int l = 0; l < steps; ++l) {
        const Real r_next = result.radii[l + 1];
        const Real rate = trace_rate(folded_sum(rows.weight, w), q, rows);
        result.q_hat[l] = q;
        result.q_prime[l] = rate;

        const Real q_pred = cfg.known_potential ? cfg.known_potential(r_next) : q + h * rate;
        pool.run(static_cast<std::size_t>(count), [&](std::size_t begin, std::size_t end) {
            for (std::size_t jj = begin; jj < end; ++jj) {
                const auto j = static_cast<Eigen::Index>(jj);
                const Real k = rows.k[jj];
                const Complex slope = defect_rhs(w[j], free[j], q, k);
                const Complex free_next = specfun::free_impedance(cfg.n, k, r_next);
                if (scheme == Scheme::euler) {
                    w[j] += h * slope;
                } else {
                    const Complex a2 = I * k * h / 2.0;
                    const Complex b1 = 1.0 + I * k * h * free_next;
                    const Complex c0 = -(w[j] + h / 2 * slope + a2 * q_pred);
                    const QuadraticChoice pick = nearest_root(a2, b1, c0, w[j] + h * slope);
                    w[j] = pick.root;
                    flip[jj] += pick.far_root;
                    ambiguous[jj] += pick.ambiguous;
                }
                free[j] = free_next;
                row_w[j] = std::abs(w[j]);
                row_phi[j] = std::abs(w[j] + free_next);
            }
        });
        for (std::size_t j = 0; j < flip.size(); ++j) {
            diag.cn_flips += flip[j];
            diag.cn_ambiguous += ambiguous[j];
            flip[j] = ambiguous[j] = 0;
        }
        Eigen::Index worst = 0;
        const Real peak = count ? row_w.maxCoeff(&worst) : 0.0;
        if (!(peak <= cfg.blowup_threshold)) {
            std::ostringstream msg;
            msg << "impedance defect reached " << peak << " at r = " << r_next << ", k = "
                << rows.k[static_cast<std::size_t>(worst)];
            throw BlowUpError(msg.str());
        }
        diag.max_abs_defect = std::max(diag.max_abs_defect, peak);
        if (count) diag.max_abs_phi = std::max(diag.max_abs_phi, row_phi.maxCoeff());

        if (cfg.known_potential) {
            q = q_pred;
        } else if (scheme == Scheme::euler) {
            q = q_pred;
        } else {
            const Real rate_pred = trace_rate(folded_sum(rows.weight, w), q_pred, rows);
            q += h / 2 * (rate + rate_pred);
        }
        if (!(q > -1)) {
            std::ostringstream msg;
            msg << "reconstructed potential fell to " << q << " at r = " << r_next;
            throw BlowUpError(msg.str());
        }
        if (snapshot_step && *snapshot_step == l + 1) result.snapshot = unfold(data, rows, w, free, r_next);
    }
    result.q_hat[steps] = q;
    result.q_prime[steps] = trace_rate(folded_sum(rows.weight, w), q, rows);
    diag.terminal_defect = count ? w.abs().maxCoeff() : 0.0;
    result.final_state = unfold(data, rows, w, free, cfg.b);
    diag.wall_seconds = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace

std::string_view to_string(Scheme scheme) { return scheme == Scheme::euler ? "euler" : "heun-cn"; }

Scheme scheme_from_string(std::string_view name) {
    if (name == "euler") return Scheme::euler;
    if (name == "heun-cn") return Scheme::heun_cn;
    throw FormatError("unknown scheme '" + std::string(name) + "' (expected euler or heun-cn)");
}

Complex riccati_rhs(Complex phi, Real q, Real r, Real k, int n) {
    if (k == 0) throw DomainError("Riccati right-hand side needs k != 0");
    if (!(r > 0)) throw DomainError("Riccati right-hand side needs r > 0");
    return -I * k * phi * phi + I * k * (1 + q) - I * (n * n - 0.25) / (k * r * r);
}

Complex defect_rhs(Complex w, Complex phi_free, Real q, Real k) {
    return -I * k * (w * (w + 2.0 * phi_free) - q);
}

Real trace_integrand(Complex phi, Real q, int n, Real r, Real k) {
    if (!(q > -1)) throw DomainError("trace integrand needs q > -1");
    const Real limit = 1 - std::sqrt(1 + q);
    if (k == 0) return limit;
    return (phi - specfun::free_impedance(n, k, r)).real() + limit;
}

Real q_derivative(const ImpedanceState& state, Real q, const quadrature::FrequencyGrid& grid) {
    Real sum = 0;
    Eigen::Index d = 0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const Real k = grid.nodes[i];
        Complex phi = 0;
        if (k != 0) {
            if (d >= state.frequencies.size() || !same_node(k, state.frequencies[d]))
                throw DomainError("impedance state is not aligned with the grid");
            phi = state.phis[d++];
        }
        sum += grid.weights[i] * trace_integrand(phi, q, state.n, state.r, k);
    }
    if (d != state.frequencies.size()) throw DomainError("impedance state is not aligned with the grid");
    return (1 + q) * trace_constant * sum;
}

QuadraticChoice nearest_root(Complex a, Complex b, Complex c, Complex guess) {
    const Complex root_disc = std::sqrt(b * b - 4.0 * a * c);
    const Real sign = (std::conj(b) * root_disc).real() >= 0 ? 1.0 : -1.0;
    const Complex big = -(b + sign * root_disc) / 2.0;
    const Complex near = c / big;
    const Complex far = big / a;
    const Real d_near = std::abs(near - guess), d_far = std::abs(far - guess);
    if (std::abs(d_near - d_far) <= 1e-12 * std::max({d_near, d_far, Real(1e-300)}))
        return {guess, false, true};
    if (d_far < d_near) return {far, true, false};
    return {near, false, false};
}

ReconstructionResult euler_march(const forward::ImpedanceData& data, const ReconstructionConfig& cfg) {
    return march(data, cfg, Scheme::euler);
}

ReconstructionResult heun_cn_march(const forward::ImpedanceData& data, const ReconstructionConfig& cfg) {
    return march(data, cfg, Scheme::heun_cn);
}

ReconstructionResult reconstruct(const forward::ImpedanceData& data, const ReconstructionConfig& cfg) {
    return cfg.scheme == Scheme::euler ? euler_march(data, cfg) : heun_cn_march(data, cfg);
}

void write_csv(std::ostream& out, const ReconstructionResult& result) {
    out << std::setprecision(17) << "r,q_hat,q_prime\n";
    for (Eigen::Index i = 0; i < result.radii.size(); ++i)
        out << result.radii[i] << "," << result.q_hat[i] << "," << result.q_prime[i] << "\n";
}

void write_diagnostics(std::ostream& out, const Diagnostics& d) {
    out << std::setprecision(17);
    out << "steps=" << d.steps << "\n"
        << "h_effective=" << d.h_effective << "\n"
        << "marched_frequencies=" << d.marched_frequencies << "\n"
        << "max_abs_phi=" << d.max_abs_phi << "\n"
        << "max_abs_defect=" << d.max_abs_defect << "\n"
        << "terminal_defect=" << d.terminal_defect << "\n"
        << "cn_flips=" << d.cn_flips << "\n"
        << "cn_ambiguous=" << d.cn_ambiguous << "\n"
        << "initial_defect_slope=" << d.initial_defect_slope << "\n"
        << "initial_check_passed=" << (d.initial_check_passed ? "true" : "false") << "\n"
        << "warning=" << d.warning << "\n"
        << "wall_seconds=" << d.wall_seconds << "\n";
}

}  // namespace helmtrace::inversion
