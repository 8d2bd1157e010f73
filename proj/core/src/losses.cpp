#include "multimix/losses.hpp"

#include <cmath>
#include <string>

#include "multimix/error.hpp"

namespace multimix {
namespace {

void check_shapes(const Eigen::MatrixXd& y, const Eigen::MatrixXd& p) {
  if (y.rows() != p.rows() || y.cols() != p.cols())
    throw ShapeError("targets " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                     " vs probabilities " + std::to_string(p.rows()) + "x" +
                     std::to_string(p.cols()));
}

// -sum_c Y log(max(P, clamp)) for every column.
Eigen::VectorXd column_terms(const Eigen::MatrixXd& y, const Eigen::MatrixXd& p, double clamp) {
  Eigen::VectorXd out(y.cols());
  for (Eigen::Index k = 0; k < y.cols(); ++k) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < y.rows(); ++c) {
      if (y(c, k) != 0.0) acc -= y(c, k) * std::log(std::max(p(c, k), clamp));
    }
    out(k) = acc;
  }
  return out;
}

}  // namespace

void LossSpec::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ParameterError("gamma must lie in [0,1], got " + std::to_string(gamma));
  if (!(clamp > 0.0)) throw ParameterError("probability clamp must be positive");
}

double cross_entropy(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& probs, double clamp) {
  check_shapes(targets, probs);
  if (targets.cols() == 0) throw ShapeError("cross_entropy of an empty batch");
  return column_terms(targets, probs, clamp).mean();
}

double weighted_cross_entropy(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& probs,
                              const Eigen::VectorXd& weights, double clamp) {
  check_shapes(targets, probs);
  if (weights.size() != targets.cols())
    throw ShapeError("one loss weight per column is required");
  const double total = weights.sum();
  if (!(total > 0.0)) throw DegenerateWeightError("loss weights sum to a non-positive value");
  return column_terms(targets, probs, clamp).dot(weights) / total;
}

double combined_distillation_loss(const Eigen::MatrixXd& mixed_targets,
                                  const Eigen::MatrixXd& student_probs,
                                  const Eigen::MatrixXd& teacher_probs, double gamma,
                                  const Eigen::VectorXd* weights, double clamp) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ParameterError("gamma must lie in [0,1], got " + std::to_string(gamma));
  check_shapes(teacher_probs, student_probs);
  const auto term = [&](const Eigen::MatrixXd& y) {
    return weights ? weighted_cross_entropy(y, student_probs, *weights, clamp)
                   : cross_entropy(y, student_probs, clamp);
  };
  if (gamma == 1.0) return term(mixed_targets);
  return gamma * term(mixed_targets) + (1.0 - gamma) * term(teacher_probs);
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index k = 0; k < logits.cols(); ++k) {
    const double top = logits.col(k).maxCoeff();
    out.col(k) = (logits.col(k).array() - top).exp().matrix();
    out.col(k) /= out.col(k).sum();
  }
  return out;
}

}  // namespace multimix
