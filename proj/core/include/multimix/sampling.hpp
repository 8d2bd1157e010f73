#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "multimix/rng.hpp"

namespace multimix {

/// Tolerance used when checking that a vector lies on the probability simplex.
inline constexpr double kSimplexTolerance = 1e-9;

/// A point of the (m-1)-simplex: nonnegative entries summing to one.
class SimplexVector {
 public:
  /// Throws ParameterError if `values` is off the simplex.
  explicit SimplexVector(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

  static bool is_on_simplex(const Eigen::Ref<const Eigen::VectorXd>& v,
                            double tol = kSimplexTolerance) noexcept;

 private:
  Eigen::VectorXd values_;
};

/// How the Dirichlet concentration of each interpolation column is chosen.
struct AlphaPolicy {
  enum class Kind { fixed, uniform_range };

  Kind kind = Kind::uniform_range;
  double value = 1.0;  // fixed
  double lo = 0.5;     // uniform_range
  double hi = 2.0;

  static AlphaPolicy fixed(double alpha);
  static AlphaPolicy uniform_range(double lo, double hi);

  /// Throws ParameterError on non-positive or inverted bounds.
  void validate() const;
  double draw(Rng& rng) const;
  bool contains(double alpha) const noexcept;
};

/// Lambda = (lambda_1, ..., lambda_n), an m x n matrix whose columns lie on
/// the simplex, plus the concentration used for each column.
struct InterpolationMatrix {
  Eigen::MatrixXd weights;
  std::vector<double> alphas;

  Eigen::Index rows() const noexcept { return weights.rows(); }
  Eigen::Index cols() const noexcept { return weights.cols(); }

  SimplexVector column(Eigen::Index k) const { return SimplexVector(weights.col(k)); }

  /// Wraps an arbitrary column-stochastic matrix (alphas left as NaN).
  static InterpolationMatrix from_weights(Eigen::MatrixXd weights);
  static InterpolationMatrix identity(Eigen::Index m);

  /// Throws ParameterError if any column is off the simplex or sizes are empty.
  void validate(double tol = kSimplexTolerance) const;
};

/// A bijection on {0, ..., m-1}. As a matrix, column i holds a single one in
/// row `mapping[i]`, so right-multiplying by it sends column mapping[i] to i.
class Permutation {
 public:
  explicit Permutation(std::vector<std::size_t> mapping);

  static Permutation identity(std::size_t m);
  /// i -> (i + shift) mod m.
  static Permutation cycle(std::size_t m, std::size_t shift = 1);

  const std::vector<std::size_t>& mapping() const noexcept { return mapping_; }
  std::size_t size() const noexcept { return mapping_.size(); }
  std::size_t operator[](std::size_t i) const { return mapping_[i]; }

  Eigen::MatrixXd matrix() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> mapping_;
};

/// Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 uses the
/// U^(1/shape) boost of a Gamma(shape + 1) draw.
double gamma_sample(double shape, Rng& rng);

/// Beta(alpha, alpha) as g1 / (g1 + g2) with g1, g2 ~ Gamma(alpha).
double beta_sample(double alpha, Rng& rng);

/// Symmetric Dirichlet over m coordinates. All-zero gamma underflow is
/// redrawn; after 100 failed attempts a NumericError is thrown.
SimplexVector dirichlet_sample(double alpha, std::size_t m, Rng& rng);

inline constexpr int kDirichletMaxRetries = 100;

/// n independent Dirichlet columns over m coordinates, alpha drawn per column.
InterpolationMatrix sample_interpolation_matrix(std::size_t m, std::size_t n,
                                                const AlphaPolicy& policy, Rng& rng);

/// Fisher-Yates shuffle of the identity.
Permutation random_permutation(std::size_t m, Rng& rng);

/// lambda * I + (1 - lambda) * Pi as an m x m interpolation matrix.
InterpolationMatrix pairwise_matrix(const Permutation& perm, double lambda);

}  // namespace multimix
