#include "helmtrace/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <iomanip>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace helmtrace::quadrature {

namespace {

struct Entry {
    Real k;
    Real w;
};

// Sorts and merges coincident nodes (shared shell boundaries of composite rules).
void merge_entries(std::vector<Entry>& entries, RealArray& nodes, RealArray& weights) {
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.k < b.k; });
    std::vector<Entry> merged;
    merged.reserve(entries.size());
    for (const auto& e : entries) {
        if (!merged.empty()
            && std::abs(merged.back().k - e.k) <= 1e-12 * std::max<Real>(1, std::abs(e.k))) {
            merged.back().w += e.w;
        } else {
            merged.push_back(e);
        }
    }
    nodes.resize(static_cast<Eigen::Index>(merged.size()));
    weights.resize(nodes.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
        nodes[static_cast<Eigen::Index>(i)] = merged[i].k;
        weights[static_cast<Eigen::Index>(i)] = merged[i].w;
    }
}

void append_symmetric(std::vector<Entry>& entries, const QuadratureRule& positive, Real scale) {
    for (Eigen::Index i = 0; i < positive.nodes.size(); ++i) {
        entries.push_back({positive.nodes[i], scale * positive.weights[i]});
        entries.push_back({-positive.nodes[i], scale * positive.weights[i]});
    }
}

QuadratureRule trapezoid_segment(Real lo, Real hi, Real spacing) {
    const int m = std::max(1, static_cast<int>(std::lround((hi - lo) / spacing)));
    const Real h = (hi - lo) / m;
    QuadratureRule rule;
    rule.nodes.resize(m + 1);
    rule.weights.setConstant(m + 1, h);
    for (int i = 0; i <= m; ++i) rule.nodes[i] = lo + h * i;
    rule.nodes[m] = hi;
    rule.weights[0] = rule.weights[m] = h / 2;
    return rule;
}

QuadratureRule shell_rule(const FrequencyGrid& base, Real lo, Real hi) {
    if (base.kind == GridKind::trapezoid) return trapezoid_segment(lo, hi, base.bulk_spacing);
    const Real panel_width = base.panel_order * base.bulk_spacing;
    const int panels = std::max(1, static_cast<int>(std::lround((hi - lo) / panel_width)));
    return composite_gauss_legendre(lo, hi, panels, base.panel_order);
}

// Legendre P_n and P_n' at x.
void legendre(int n, Real x, Real& p, Real& dp) {
    Real p0 = 1, p1 = x;
    if (n == 0) {
        p = 1;
        dp = 0;
        return;
    }
    for (int k = 2; k <= n; ++k) {
        const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p = p1;
    dp = n * (x * p1 - p0) / (x * x - 1);
}

}  // namespace

std::string_view to_string(GridKind kind) {
    switch (kind) {
        case GridKind::trapezoid: return "trapezoid";
        case GridKind::graded_log: return "graded-log";
        case GridKind::moment_fitted: return "moment-fitted";
    }
    return "unknown";
}

GridKind grid_kind_from_string(std::string_view name) {
    if (name == "trapezoid") return GridKind::trapezoid;
    if (name == "graded-log") return GridKind::graded_log;
    if (name == "moment-fitted") return GridKind::moment_fitted;
    throw FormatError("unknown grid kind '" + std::string(name) + "'");
}

Real FrequencyGrid::support() const {
    return omega * std::pow(richardson_ratio, richardson_levels);
}

void validate(const FrequencyGrid& grid) {
    const Eigen::Index m = grid.nodes.size();
    if (m == 0 || grid.weights.size() != m)
        throw DomainError("frequency grid must have equal, non-zero node and weight counts");
    for (Eigen::Index i = 1; i < m; ++i)
        if (!(grid.nodes[i] > grid.nodes[i - 1]))
            throw DomainError("frequency grid nodes must be strictly increasing");
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index j = m - 1 - i;
        const Real scale = std::max<Real>(1, std::abs(grid.nodes[i]));
        if (std::abs(grid.nodes[i] + grid.nodes[j]) > 1e-12 * scale
            || std::abs(grid.weights[i] - grid.weights[j]) > 1e-12 * std::abs(grid.weights[i]) + 1e-300)
            throw DomainError("frequency grid must be symmetric about k = 0");
    }
}

QuadratureRule gauss_legendre(int order, Real lo, Real hi) {
    if (order < 1) throw DomainError("Gauss-Legendre order must be positive");
    // Golub-Welsch on the Jacobi matrix, then one Newton polish per node.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(std::max(order - 1, 0));
    for (int i = 1; i < order; ++i) sub[i - 1] = i / std::sqrt(4.0 * i * i - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        Real x = solver.eigenvalues()[i];
        Real p, dp;
        if (order > 1) {
            for (int it = 0; it < 2; ++it) {
                legendre(order, x, p, dp);
                x -= p / dp;
            }
            legendre(order, x, p, dp);
            rule.weights[i] = 2.0 / ((1 - x * x) * dp * dp);
        } else {
            rule.weights[i] = 2.0;
        }
        rule.nodes[i] = x;
    }
    const Real half = (hi - lo) / 2, mid = (hi + lo) / 2;
    rule.nodes = mid + half * rule.nodes;
    rule.weights *= half;
    return rule;
}

QuadratureRule composite_gauss_legendre(Real lo, Real hi, int panels, int order) {
    const QuadratureRule ref = gauss_legendre(order);
    QuadratureRule rule;
    rule.nodes.resize(static_cast<Eigen::Index>(panels) * order);
    rule.weights.resize(rule.nodes.size());
    const Real width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const Real a = lo + width * p;
        const Real b = p + 1 == panels ? hi : a + width;
        const Real half = (b - a) / 2, mid = (a + b) / 2;
        rule.nodes.segment(static_cast<Eigen::Index>(p) * order, order) = mid + half * ref.nodes;
        rule.weights.segment(static_cast<Eigen::Index>(p) * order, order) = half * ref.weights;
    }
    return rule;
}

FrequencyGrid trapezoid_grid(Real omega, int n_points) {
    if (!(omega > 0)) throw DomainError("trapezoid grid needs omega > 0");
    if (n_points < 3) throw DomainError("trapezoid grid needs at least 3 points");
    FrequencyGrid grid;
    grid.kind = GridKind::trapezoid;
    grid.omega = omega;
    grid.nodes.resize(n_points);
    const Real spacing = 2 * omega / (n_points - 1);
    for (int j = 0; j < n_points; ++j) grid.nodes[j] = 2 * omega * j / (n_points - 1) - omega;
    // exact symmetry of the node set
    for (int j = 0; j < n_points / 2; ++j) grid.nodes[n_points - 1 - j] = -grid.nodes[j];
    if (n_points % 2) grid.nodes[n_points / 2] = 0;
    grid.weights.setConstant(n_points, spacing);
    grid.weights[0] = grid.weights[n_points - 1] = spacing / 2;
    grid.bulk_spacing = spacing;
    return grid;
}

QuadratureRule graded_log_panels(Real k_cut, int depth, int gauss_order) {
    if (!(k_cut > 0)) throw DomainError("graded panels need k_cut > 0");
    if (depth < 1 || depth > 60) throw DomainError("graded panel depth must lie in [1, 60]");
    const QuadratureRule ref = gauss_legendre(gauss_order);
    QuadratureRule rule;
    rule.nodes.resize(static_cast<Eigen::Index>(depth) * gauss_order);
    rule.weights.resize(rule.nodes.size());
    // panel i = depth-1 is innermost; fill ascending
    for (int i = depth - 1, slot = 0; i >= 0; --i, ++slot) {
        const Real hi = std::ldexp(k_cut, -i);
        const Real lo = std::ldexp(k_cut, -(i + 1));
        const Real half = (hi - lo) / 2, mid = (hi + lo) / 2;
        rule.nodes.segment(static_cast<Eigen::Index>(slot) * gauss_order, gauss_order) = mid + half * ref.nodes;
        rule.weights.segment(static_cast<Eigen::Index>(slot) * gauss_order, gauss_order) = half * ref.weights;
    }
    return rule;
}

Real log_moment(int m, int n, Real c) {
    if (m < 0 || !(c > 0) || c >= 1) throw DomainError("log_moment needs m >= 0 and 0 < c < 1");
    if (n >= 0) {
        // I(m,n) = c^{m+1} log^n c / (m+1) - n/(m+1) I(m, n-1)
        const Real cp = std::pow(c, m + 1) / (m + 1);
        const Real lc = std::log(c);
        Real value = cp;
        Real lpow = 1;
        for (int j = 1; j <= n; ++j) {
            lpow *= lc;
            value = cp * lpow - Real(j) / (m + 1) * value;
        }
        return value;
    }
    auto f = [m, n](Real k) { return std::pow(k, m) * std::pow(std::log(k), n); };
    Real previous = graded_log_panels(c, 30, 16).integrate(f);
    for (int depth : {45, 60}) {
        const Real current = graded_log_panels(c, depth, 24).integrate(f);
        if (std::abs(current - previous) <= 1e-15 * std::abs(current)) return current;
        previous = current;
    }
    return previous;
}

MomentFitReport moment_fitted_rule(const LogBasisSpec& spec, int n_nodes, Real max_weight) {
    if (n_nodes < 35) throw DomainError("moment-fitted rule needs at least 35 nodes");
    const Real c = spec.k_cut;
    Eigen::VectorXd x(n_nodes);
    for (int j = 0; j < n_nodes; ++j)
        x[j] = c / 2 * (1 - std::cos((2 * j + 1) * pi / (2 * n_nodes)));

    const int rows = (spec.m_max - spec.m_min + 1) * (spec.n_max - spec.n_min + 1);
    Eigen::MatrixXd a(rows, n_nodes);
    Eigen::VectorXd b(rows);
    Eigen::VectorXd moments(rows);
    std::vector<std::pair<int, int>> labels;
    int row = 0;
    for (int m = spec.m_min; m <= spec.m_max; ++m) {
        for (int n = spec.n_min; n <= spec.n_max; ++n, ++row) {
            const Real moment = log_moment(m, n, c);
            const Real scale = 1 / std::abs(moment);
            for (int j = 0; j < n_nodes; ++j)
                a(row, j) = std::pow(x[j], m) * std::pow(std::log(x[j]), n) * scale;
            b[row] = moment * scale;
            moments[row] = moment;
            labels.emplace_back(m, n);
        }
    }
    const Eigen::VectorXd w = a.completeOrthogonalDecomposition().solve(b);

    MomentFitReport report;
    report.rule.nodes = x.array();
    report.rule.weights = w.array();
    report.max_abs_weight = w.cwiseAbs().maxCoeff();
    const Eigen::VectorXd residual = (a * w - b).cwiseAbs();
    Eigen::Index worst = 0;
    report.max_residual = residual.maxCoeff(&worst);
    report.worst_m = labels[static_cast<std::size_t>(worst)].first;
    report.worst_n = labels[static_cast<std::size_t>(worst)].second;
    report.meets_target = report.max_residual <= spec.target_residual;
    if (report.max_abs_weight > max_weight)
        throw IllConditionedError("moment-fitted weights reach " + std::to_string(report.max_abs_weight)
                                  + " in magnitude");
    return report;
}

RealArray richardson_coefficients(int levels, Real ratio) {
    if (levels < 0) throw DomainError("Richardson levels must be non-negative");
    if (levels > 4) throw IllConditionedError("more than 4 Richardson levels is not supported");
    if (!(ratio > 1)) throw DomainError("Richardson ratio must exceed 1");
    const int size = levels + 1;
    Eigen::MatrixXd a(size, size);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
    rhs[0] = 1;
    for (int i = 0; i < size; ++i) {
        a(0, i) = 1;
        for (int m = 1; m <= levels; ++m) a(m, i) = std::pow(ratio, -Real(i) * (2 * m - 1));
    }
    const Eigen::VectorXd c = a.fullPivLu().solve(rhs);
    if (c.cwiseAbs().maxCoeff() > 1e3)
        throw IllConditionedError("Richardson coefficients exceed 1e3; use a larger ratio");
    return c.array();
}

FrequencyGrid richardson_combine(const FrequencyGrid& base, int levels, Real ratio) {
    if (levels == 0) return base;
    if (base.richardson_levels != 0) throw DomainError("Richardson base grid is already combined");
    const RealArray c = richardson_coefficients(levels, ratio);
    RealArray tail(levels + 1);  // C_s = sum_{i >= s} c_i
    Real acc = 0;
    for (int s = levels; s >= 0; --s) tail[s] = acc += c[s];

    std::vector<Entry> entries;
    for (Eigen::Index i = 0; i < base.nodes.size(); ++i)
        entries.push_back({base.nodes[i], tail[0] * base.weights[i]});
    for (int s = 1; s <= levels; ++s) {
        const Real lo = base.omega * std::pow(ratio, s - 1);
        const Real hi = base.omega * std::pow(ratio, s);
        append_symmetric(entries, shell_rule(base, lo, hi), tail[s]);
    }
    FrequencyGrid out = base;
    merge_entries(entries, out.nodes, out.weights);
    out.richardson_levels = levels;
    out.richardson_ratio = ratio;
    return out;
}

FrequencyGrid make_grid(const GridOptions& o) {
    const Real base_omega = o.omega / std::pow(o.richardson_ratio, o.richardson_levels);
    FrequencyGrid base;
    if (o.kind == GridKind::trapezoid) {
        if (o.n_freq < 4) throw DomainError("trapezoid grid needs at least 4 points");
        const Real spacing = 2 * o.omega / (o.n_freq - 1);
        const int n_base = std::max(4, static_cast<int>(std::lround(2 * base_omega / spacing)) + 1);
        base = trapezoid_grid(base_omega, o.richardson_levels == 0 ? o.n_freq : n_base);
        base.bulk_spacing = o.richardson_levels == 0 ? base.bulk_spacing : spacing;
        return richardson_combine(base, o.richardson_levels, o.richardson_ratio);
    }

    if (!(base_omega > o.k_cut))
        throw DomainError("Richardson base bandlimit must exceed the near-zero cut");
    if (o.n_freq < 3) throw DomainError("need at least 3 frequencies");
    if (!(o.bulk_density > 0)) throw DomainError("bulk density must be positive");
    base.kind = o.kind;
    base.omega = base_omega;
    base.panel_order = o.panel_order;
    base.bulk_spacing = 2 * o.omega / ((o.n_freq - 1) * o.bulk_density);

    std::vector<Entry> entries;
    bool fitted = false;
    if (o.kind == GridKind::moment_fitted) {
        const MomentFitReport fit = moment_fitted_rule(LogBasisSpec{.k_cut = o.k_cut}, o.moment_nodes);
        if (fit.meets_target) {
            append_symmetric(entries, fit.rule, 1);
            fitted = true;
        } else {
            std::ostringstream msg;
            msg << "moment fit residual " << fit.max_residual << " at k^" << fit.worst_m << " log^"
                << fit.worst_n << " k misses target; using graded panels";
            base.note = msg.str();
            base.kind = GridKind::graded_log;
        }
    }
    if (!fitted) {
        append_symmetric(entries, graded_log_panels(o.k_cut, o.graded_depth, o.graded_order), 1);
        // k = 0 node carries the closure panel [-k_min, k_min]
        entries.push_back({0.0, 2 * std::ldexp(o.k_cut, -o.graded_depth)});
    }
    const int panels = std::max(1, static_cast<int>(std::lround(
                                       (base_omega - o.k_cut) / (o.panel_order * base.bulk_spacing))));
    append_symmetric(entries, composite_gauss_legendre(o.k_cut, base_omega, panels, o.panel_order), 1);
    merge_entries(entries, base.nodes, base.weights);
    return richardson_combine(base, o.richardson_levels, o.richardson_ratio);
}

void write_csv(std::ostream& out, const FrequencyGrid& grid) {
    out << "# kind=" << to_string(grid.kind) << " omega=" << std::setprecision(17) << grid.omega
        << " richardson_levels=" << grid.richardson_levels << " richardson_ratio=" << grid.richardson_ratio
        << "\n";
    for (Eigen::Index i = 0; i < grid.nodes.size(); ++i)
        out << grid.nodes[i] << "," << grid.weights[i] << "\n";
}

}  // namespace helmtrace::quadrature
