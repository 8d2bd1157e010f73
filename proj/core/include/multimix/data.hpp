#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "multimix/mixer.hpp"
#include "multimix/rng.hpp"

namespace multimix {

enum class Split { train, test, ood };

std::string_view to_string(Split split) noexcept;

/// Inputs (D x N), integer labels and the per-dimension data box recorded at
/// construction. Attacks clip to this box.
struct Dataset {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;
  int classes = 0;
  Eigen::VectorXd box_min;
  Eigen::VectorXd box_max;
  Split split = Split::train;

  Eigen::Index size() const noexcept { return inputs.cols(); }
  Eigen::Index dim() const noexcept { return inputs.rows(); }

  void recompute_box();
  /// Labels in [0, classes), one label per column, box contains every input.
  void validate() const;
  /// Columns `indices` with one-hot targets.
  LabeledBatch batch(const std::vector<std::size_t>& indices) const;
  LabeledBatch all() const;
};

struct AugmentationConfig {
  double gaussian_sigma = 0.0;
  double dropout_p = 0.0;

  bool is_identity() const noexcept { return gaussian_sigma == 0.0 && dropout_p == 0.0; }
  void validate() const;
};

/// Isotropic Gaussian classes with seeded centers.
struct GaussianMixtureModel {
  Eigen::MatrixXd centers;  // D x c
  double spread = 1.0;

  int classes() const noexcept { return static_cast<int>(centers.cols()); }
  Eigen::Index dim() const noexcept { return centers.rows(); }
  double min_separation() const;
  /// Union bound (1/c) sum_i sum_{j != i} Phi(-|mu_i - mu_j| / (2 spread)) on
  /// the error of the nearest-center (Bayes) rule.
  double bayes_error_bound() const;
};

/// Minimum center separation, in units of the spread.
inline constexpr double kMinCenterSeparation = 6.0;

GaussianMixtureModel make_gaussian_mixture(int classes, Eigen::Index dim, double spread,
                                           std::uint64_t seed);
/// `per_class` draws from every class, ordered class by class.
Dataset sample_gaussian_mixture(const GaussianMixtureModel& model, std::size_t per_class,
                                std::uint64_t seed, Split split = Split::train);
/// Centers from `seed`, samples from a child stream of the same seed.
Dataset gen_gaussian_mixture(int classes, std::size_t per_class, Eigen::Index dim, double spread,
                             std::uint64_t seed);

/// Translates every input by `shift` along a seeded random unit direction and
/// marks the result as out-of-distribution.
Dataset gen_ood_shift(const Dataset& dataset, double shift, std::uint64_t seed);

/// c x N one-hot matrix; throws ParameterError on an out-of-range label.
Eigen::MatrixXd one_hot(const std::vector<int>& labels, int classes);
/// Lowest-index argmax of every column.
std::vector<int> argmax_columns(const Eigen::MatrixXd& scores);

/// Reads `label,f_0,...` CSV. Errors carry the offending line number.
Dataset load_csv(const std::filesystem::path& path, std::string_view label_column = "label");
Dataset parse_csv(std::string_view text, std::string_view label_column = "label",
                  const std::string& source = "<memory>");
std::string to_csv(const Dataset& dataset);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace multimix
