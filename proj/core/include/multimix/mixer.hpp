#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "multimix/sampling.hpp"

namespace multimix {

/// Inputs X (D x m) with targets Y (c x m). Targets are one-hot on ingestion
/// and stay on the simplex after any mixing.
struct LabeledBatch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;

  Eigen::Index size() const noexcept { return inputs.cols(); }
};

/// Per-example d x r feature blocks, stored grouped by spatial position:
/// position(j) is the d x m matrix Z^j = (z_1^j, ..., z_m^j).
class DenseEmbeddingBatch {
 public:
  DenseEmbeddingBatch() = default;
  explicit DenseEmbeddingBatch(std::vector<Eigen::MatrixXd> positions);

  /// Groups m example blocks (each d x r) by position.
  static DenseEmbeddingBatch from_examples(const std::vector<Eigen::MatrixXd>& examples);
  /// Splits a (d*r) x m matrix whose rows [j*d, (j+1)*d) hold position j.
  static DenseEmbeddingBatch from_stacked(const Eigen::MatrixXd& stacked, Eigen::Index resolution);

  Eigen::Index dim() const noexcept { return positions_.empty() ? 0 : positions_.front().rows(); }
  Eigen::Index resolution() const noexcept { return static_cast<Eigen::Index>(positions_.size()); }
  Eigen::Index batch_size() const noexcept {
    return positions_.empty() ? 0 : positions_.front().cols();
  }

  const Eigen::MatrixXd& position(Eigen::Index j) const {
    return positions_[static_cast<std::size_t>(j)];
  }
  const std::vector<Eigen::MatrixXd>& positions() const noexcept { return positions_; }

  /// The d x r block of example i.
  Eigen::MatrixXd example(Eigen::Index i) const;
  std::vector<Eigen::MatrixXd> examples() const;
  Eigen::MatrixXd stacked() const;

 private:
  std::vector<Eigen::MatrixXd> positions_;
};

/// Interpolated embeddings and targets ready for the loss. Vanilla mixers
/// produce a single block with all-ones weights; the dense mixer produces one
/// block per spatial position with the attention mass s^j as weights.
struct MixOutput {
  std::vector<Eigen::MatrixXd> embeddings;  // r blocks of d x n
  std::vector<Eigen::MatrixXd> targets;     // r blocks of c x n
  std::vector<Eigen::VectorXd> loss_weights;

  Eigen::Index resolution() const noexcept { return static_cast<Eigen::Index>(embeddings.size()); }
  Eigen::Index tuples() const noexcept { return embeddings.empty() ? 0 : embeddings.front().cols(); }
};

/// Column-mass floor used when renormalizing attention-scaled columns.
inline constexpr double kNormalizationGuard = 1e-8;

/// M = diag(a) Lambda, s = 1^T M, and M_hat = M diag(s)^-1.
struct ScaledInterpolation {
  Eigen::MatrixXd scaled;      // M
  Eigen::MatrixXd normalized;  // M_hat
  Eigen::VectorXd mass;        // s
};

/// X(lambda I + (1 - lambda) Pi) on inputs and targets alike.
LabeledBatch input_mixup(const LabeledBatch& batch, const Permutation& perm, double lambda);

/// Manifold mixup on embeddings Z (d x m) and targets Y (c x m); n = m.
MixOutput pairwise_interpolate(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& targets,
                               const Permutation& perm, double lambda);

/// Z Lambda and Y Lambda for an m x n interpolation matrix.
MixOutput multimix_interpolate(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& targets,
                               const InterpolationMatrix& lambda);

/// Scales the rows of Lambda^j by the attention a^j and renormalizes the
/// columns. Columns whose mass falls below kNormalizationGuard are divided by
/// the guard instead, so they keep their small mass in the loss weight.
ScaledInterpolation dense_scale_normalize(const Eigen::MatrixXd& lambda,
                                          const Eigen::Ref<const Eigen::VectorXd>& attention);

/// Per-position interpolation Z^j M_hat^j, Y M_hat^j with loss weights s^j.
/// `attention[j]` holds a^j = (a_1^j, ..., a_m^j).
MixOutput dense_multimix_interpolate(const DenseEmbeddingBatch& embeddings,
                                     const Eigen::MatrixXd& targets,
                                     const std::vector<InterpolationMatrix>& lambdas,
                                     const std::vector<Eigen::VectorXd>& attention);

}  // namespace multimix
