// Independent reference computations shared by the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "multimix/rng.hpp"

namespace oracle {

/// Asymptotic Kolmogorov-Smirnov critical coefficient at the 1% level.
inline constexpr double kKs1Percent = 1.628;

inline double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double ks_one_sample_critical(std::size_t n) { return kKs1Percent / std::sqrt(static_cast<double>(n)); }

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                             static_cast<double>(j) / static_cast<double>(b.size())));
  }
  return d;
}

inline double ks_two_sample_critical(std::size_t n, std::size_t m) {
  const auto a = static_cast<double>(n), b = static_cast<double>(m);
  return kKs1Percent * std::sqrt((a + b) / (a * b));
}

/// Closed-form Beta(alpha, alpha) CDFs for the concentrations the tests use.
inline double beta_half_cdf(double x) { return 2.0 / M_PI * std::asin(std::sqrt(x)); }
inline double beta_two_cdf(double x) { return x * x * (3.0 - 2.0 * x); }
/// Inverse-CDF draw from Beta(1/2, 1/2).
inline double beta_half_draw(multimix::Rng& rng) {
  const double s = std::sin(M_PI * rng.uniform() / 2.0);
  return s * s;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, multimix::Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = rng.normal();
  return m;
}

/// Columns drawn uniformly from the simplex by normalized exponentials.
inline Eigen::MatrixXd random_stochastic(Eigen::Index rows, Eigen::Index cols, multimix::Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = -std::log(rng.uniform_open());
  for (Eigen::Index c = 0; c < cols; ++c) m.col(c) /= m.col(c).sum();
  return m;
}

inline Eigen::MatrixXd random_one_hot(Eigen::Index classes, Eigen::Index cols, multimix::Rng& rng) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(classes, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    y(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(classes))), c) = 1.0;
  return y;
}

/// -sum Y log P per column, averaged; loop form.
inline double cross_entropy_loop(const Eigen::MatrixXd& y, const Eigen::MatrixXd& p) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < y.cols(); ++k)
    for (Eigen::Index c = 0; c < y.rows(); ++c) total -= y(c, k) * std::log(std::max(p(c, k), 1e-12));
  return total / static_cast<double>(y.cols());
}

}  // namespace oracle
