#include "multimix/attention.hpp"

#include <cmath>

#include "multimix/error.hpp"

namespace multimix {

Eigen::VectorXd attention_map(const Eigen::MatrixXd& features, const AttentionConfig& cfg,
                              const Eigen::MatrixXd* classifier, const Eigen::VectorXd* target) {
  const Eigen::Index r = features.cols();
  if (r < 1) throw ShapeError("attention needs at least one spatial position");
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(r, 1.0 / static_cast<double>(r));
  if (cfg.anchor == AttentionAnchor::uniform) return uniform;

  Eigen::VectorXd anchor;
  if (cfg.anchor == AttentionAnchor::gap) {
    anchor = features.rowwise().mean();
  } else {
    if (classifier == nullptr || target == nullptr)
      throw ParameterError("CAM attention requires classifier weights and a target");
    if (classifier->rows() != features.rows() || classifier->cols() != target->size())
      throw ShapeError("CAM classifier/target shapes do not match the embedding");
    anchor = (*classifier) * (*target);
  }

  const Eigen::VectorXd scores = features.transpose() * anchor;
  if (cfg.nonlinearity == AttentionNonlinearity::softmax) {
    const Eigen::VectorXd e = (scores.array() - scores.maxCoeff()).exp().matrix();
    return e / e.sum();
  }
  const Eigen::VectorXd relu = scores.cwiseMax(0.0);
  const double mass = relu.sum();
  if (!(mass >= kAttentionFallbackMass) || !std::isfinite(mass)) return uniform;
  return relu / mass;
}

std::string_view to_string(AttentionAnchor anchor) noexcept {
  switch (anchor) {
    case AttentionAnchor::gap: return "gap";
    case AttentionAnchor::cam: return "cam";
    case AttentionAnchor::uniform: return "uniform";
  }
  return "?";
}

std::string_view to_string(AttentionNonlinearity h) noexcept {
  return h == AttentionNonlinearity::softmax ? "softmax" : "l1_relu";
}

std::optional<AttentionAnchor> parse_anchor(std::string_view text) noexcept {
  if (text == "gap") return AttentionAnchor::gap;
  if (text == "cam") return AttentionAnchor::cam;
  if (text == "uniform") return AttentionAnchor::uniform;
  return std::nullopt;
}

std::optional<AttentionNonlinearity> parse_nonlinearity(std::string_view text) noexcept {
  if (text == "softmax") return AttentionNonlinearity::softmax;
  if (text == "l1_relu") return AttentionNonlinearity::l1_relu;
  return std::nullopt;
}

}  // namespace multimix
