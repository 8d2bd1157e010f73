#pragma once

#include <Eigen/Core>

namespace multimix {

/// Probability floor applied inside every log.
inline constexpr double kProbabilityFloor = 1e-12;

struct LossSpec {
  enum class Mode { plain, weighted };

  Mode mode = Mode::plain;
  /// Weight of the target term; 1 - gamma goes to the teacher term.
  double gamma = 0.5;
  double clamp = kProbabilityFloor;

  void validate() const;
};

/// Mean over columns of -sum_c Y log(max(P, clamp)).
double cross_entropy(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& probs,
                     double clamp = kProbabilityFloor);

/// -1^T (Y .* log P) s / (1^T s). Throws DegenerateWeightError if sum(s) <= 0.
double weighted_cross_entropy(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& probs,
                              const Eigen::VectorXd& weights, double clamp = kProbabilityFloor);

/// gamma H(Y_mix, P) + (1 - gamma) H(P_teacher, P), weighted when `weights`
/// is given.
double combined_distillation_loss(const Eigen::MatrixXd& mixed_targets,
                                  const Eigen::MatrixXd& student_probs,
                                  const Eigen::MatrixXd& teacher_probs, double gamma,
                                  const Eigen::VectorXd* weights = nullptr,
                                  double clamp = kProbabilityFloor);

/// Column-wise softmax of a logit matrix.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

}  // namespace multimix
