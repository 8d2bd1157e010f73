#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Core>

namespace multimix {

enum class AttentionAnchor { gap, cam, uniform };
enum class AttentionNonlinearity { softmax, l1_relu };

struct AttentionConfig {
  AttentionAnchor anchor = AttentionAnchor::gap;
  AttentionNonlinearity nonlinearity = AttentionNonlinearity::l1_relu;
};

/// Below this l1 mass after the ReLU the map falls back to uniform.
inline constexpr double kAttentionFallbackMass = 1e-12;

/// Spatial attention a = h(z^T u) over the r positions of one d x r embedding.
///
/// The anchor u is the mean feature (gap), the classifier column W y of the
/// example's label (cam), or ignored (uniform, which returns 1_r / r). cam
/// needs both `classifier` (d x c) and `target` (length c); a ParameterError
/// is thrown otherwise. The result is always on the simplex.
Eigen::VectorXd attention_map(const Eigen::MatrixXd& features, const AttentionConfig& cfg,
                              const Eigen::MatrixXd* classifier = nullptr,
                              const Eigen::VectorXd* target = nullptr);

std::string_view to_string(AttentionAnchor anchor) noexcept;
std::string_view to_string(AttentionNonlinearity h) noexcept;
std::optional<AttentionAnchor> parse_anchor(std::string_view text) noexcept;
std::optional<AttentionNonlinearity> parse_nonlinearity(std::string_view text) noexcept;

}  // namespace multimix
