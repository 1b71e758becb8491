#ifndef HELMTRACE_STATS_HPP
#define HELMTRACE_STATS_HPP

#include <cmath>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

namespace helmtrace::stats {

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope needs two equal-length series of length >= 2");
    const Eigen::Index m = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(m, 2);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        a(i, 0) = std::log(x[i]);
        a(i, 1) = 1.0;
        b(i) = std::log(y[i]);
    }
    return a.colPivHouseholderQr().solve(b)(0);
}

}  // namespace helmtrace::stats

#endif  // HELMTRACE_STATS_HPP
