#include "multimix/sampling.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "multimix/error.hpp"

namespace multimix {

SimplexVector::SimplexVector(Eigen::VectorXd values) : values_(std::move(values)) {
  if (!is_on_simplex(values_)) {
    throw ParameterError("vector of size " + std::to_string(values_.size()) +
                         " is not on the probability simplex");
  }
}

bool SimplexVector::is_on_simplex(const Eigen::Ref<const Eigen::VectorXd>& v,
                                  double tol) noexcept {
  if (v.size() == 0) return false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) >= 0.0)) return false;
  }
  return std::abs(v.sum() - 1.0) <= tol;
}

AlphaPolicy AlphaPolicy::fixed(double alpha) {
  AlphaPolicy p;
  p.kind = Kind::fixed;
  p.value = alpha;
  p.validate();
  return p;
}

AlphaPolicy AlphaPolicy::uniform_range(double lo, double hi) {
  AlphaPolicy p;
  p.kind = Kind::uniform_range;
  p.lo = lo;
  p.hi = hi;
  p.validate();
  return p;
}

void AlphaPolicy::validate() const {
  if (kind == Kind::fixed) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw ParameterError("fixed alpha must be positive, got " + std::to_string(value));
  } else if (!(lo > 0.0) || !(lo <= hi) || !std::isfinite(hi)) {
    throw ParameterError("alpha range requires 0 < lo <= hi, got [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  }
}

double AlphaPolicy::draw(Rng& rng) const {
  if (kind == Kind::fixed) return value;
  return lo == hi ? lo : rng.uniform(lo, hi);
}

bool AlphaPolicy::contains(double alpha) const noexcept {
  if (kind == Kind::fixed) return alpha == value;
  return alpha >= lo && alpha <= hi;
}

InterpolationMatrix InterpolationMatrix::from_weights(Eigen::MatrixXd weights) {
  InterpolationMatrix out;
  out.alphas.assign(static_cast<std::size_t>(weights.cols()),
                    std::numeric_limits<double>::quiet_NaN());
  out.weights = std::move(weights);
  return out;
}

InterpolationMatrix InterpolationMatrix::identity(Eigen::Index m) {
  return from_weights(Eigen::MatrixXd::Identity(m, m));
}

void InterpolationMatrix::validate(double tol) const {
  if (weights.rows() < 1 || weights.cols() < 1)
    throw ParameterError("interpolation matrix must be at least 1x1");
  if (alphas.size() != static_cast<std::size_t>(weights.cols()))
    throw ParameterError("one alpha per interpolation column is required");
  for (Eigen::Index k = 0; k < weights.cols(); ++k) {
    if (!SimplexVector::is_on_simplex(weights.col(k), tol))
      throw ParameterError("interpolation column " + std::to_string(k) + " is off the simplex");
  }
}

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  std::vector<bool> seen(mapping_.size(), false);
  for (std::size_t target : mapping_) {
    if (target >= mapping_.size() || seen[target])
      throw ParameterError("permutation mapping is not a bijection");
    seen[target] = true;
  }
}

Permutation Permutation::identity(std::size_t m) {
  std::vector<std::size_t> map(m);
  std::iota(map.begin(), map.end(), std::size_t{0});
  return Permutation(std::move(map));
}

Permutation Permutation::cycle(std::size_t m, std::size_t shift) {
  std::vector<std::size_t> map(m);
  for (std::size_t i = 0; i < m; ++i) map[i] = (i + shift) % m;
  return Permutation(std::move(map));
}

Eigen::MatrixXd Permutation::matrix() const {
  const auto m = static_cast<Eigen::Index>(mapping_.size());
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    pi(static_cast<Eigen::Index>(mapping_[static_cast<std::size_t>(i)]), i) = 1.0;
  return pi;
}

double gamma_sample(double shape, Rng& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape))
    throw ParameterError("gamma shape must be positive, got " + std::to_string(shape));
  if (shape < 1.0) {
    const double boosted = gamma_sample(shape + 1.0, rng);
    return boosted * std::pow(rng.uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_sample(double alpha, Rng& rng) {
  if (!(alpha > 0.0))
    throw ParameterError("beta alpha must be positive, got " + std::to_string(alpha));
  for (int attempt = 0; attempt < kDirichletMaxRetries; ++attempt) {
    const double g1 = gamma_sample(alpha, rng);
    const double g2 = gamma_sample(alpha, rng);
    const double total = g1 + g2;
    if (total > 0.0) return g1 / total;
  }
  throw NumericError("beta_sample: gamma draws underflowed to zero repeatedly");
}

SimplexVector dirichlet_sample(double alpha, std::size_t m, Rng& rng) {
  if (!(alpha > 0.0))
    throw ParameterError("dirichlet alpha must be positive, got " + std::to_string(alpha));
  if (m < 1) throw ParameterError("dirichlet dimension must be at least 1");
  Eigen::VectorXd draws(static_cast<Eigen::Index>(m));
  if (m == 1) {
    draws(0) = 1.0;
    return SimplexVector(std::move(draws));
  }
  for (int attempt = 0; attempt < kDirichletMaxRetries; ++attempt) {
    for (Eigen::Index i = 0; i < draws.size(); ++i) draws(i) = gamma_sample(alpha, rng);
    const double total = draws.sum();
    if (total > 0.0 && std::isfinite(total)) {
      draws /= total;
      return SimplexVector(std::move(draws));
    }
  }
  throw NumericError("dirichlet_sample: all gamma draws underflowed after " +
                     std::to_string(kDirichletMaxRetries) + " retries");
}

InterpolationMatrix sample_interpolation_matrix(std::size_t m, std::size_t n,
                                                const AlphaPolicy& policy, Rng& rng) {
  if (m < 1 || n < 1) throw ParameterError("interpolation matrix needs m >= 1 and n >= 1");
  policy.validate();
  InterpolationMatrix out;
  out.weights.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  out.alphas.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double alpha = policy.draw(rng);
    out.alphas[k] = alpha;
    out.weights.col(static_cast<Eigen::Index>(k)) = dirichlet_sample(alpha, m, rng).values();
  }
  return out;
}

Permutation random_permutation(std::size_t m, Rng& rng) {
  if (m < 1) throw ParameterError("permutation size must be at least 1");
  std::vector<std::size_t> map(m);
  std::iota(map.begin(), map.end(), std::size_t{0});
  for (std::size_t i = m - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(map[i], map[j]);
  }
  return Permutation(std::move(map));
}

InterpolationMatrix pairwise_matrix(const Permutation& perm, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ParameterError("lambda must lie in [0,1], got " + std::to_string(lambda));
  const auto m = static_cast<Eigen::Index>(perm.size());
  Eigen::MatrixXd weights = lambda * Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    weights(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]), i) += 1.0 - lambda;
  return InterpolationMatrix::from_weights(std::move(weights));
}

}  // namespace multimix
