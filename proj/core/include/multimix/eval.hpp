#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "multimix/data.hpp"
#include "multimix/model.hpp"

namespace multimix {

/// Percentage of columns whose argmax (lowest index on ties) differs.
double top1_error(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& targets);

/// Mean squared distance between l2-normalized embeddings over same-class
/// pairs. Throws UndefinedMetricError when no class has two examples.
double alignment(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels);

/// log of the mean over distinct pairs of exp(-t |z_i - z_j|^2), on
/// l2-normalized embeddings.
double uniformity(const Eigen::MatrixXd& embeddings, double t = 2.0);

/// Per-dimension bounds adversarial inputs are clipped to.
struct DataBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static DataBox of(const Dataset& dataset) { return {dataset.box_min, dataset.box_max}; }
};

struct AttackConfig {
  enum class Kind { fgsm, pgd };

  Kind kind = Kind::pgd;
  double epsilon = 0.1;  // l-infinity radius, input units
  double step_size = 0.05;
  std::size_t iterations = 7;
  /// PGD starts from a uniform point of the epsilon ball when set.
  bool random_start = true;

  void validate() const;
};

/// X + epsilon sign(grad_X CE), clipped to the box.
Eigen::MatrixXd fgsm_attack(const ModelParams& params, const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& targets, double epsilon, const DataBox& box);

/// Signed-gradient ascent projected onto the epsilon ball around X and the box
/// after every step.
Eigen::MatrixXd pgd_attack(const ModelParams& params, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& targets, const AttackConfig& cfg,
                           const DataBox& box, Rng& rng);

struct ScoredExample {
  double confidence = 0.0;
  bool is_id = true;
};

/// Max softmax probability per column.
std::vector<ScoredExample> score_examples(const ModelParams& params, const Eigen::MatrixXd& inputs,
                                          bool is_id);

struct OodMetrics {
  double detection_accuracy = 0.0;  // percent, best balanced accuracy over thresholds
  double auroc = 0.0;
  double aupr_id = 0.0;
  double aupr_ood = 0.0;
};

/// Rank-statistic AUROC with positives scoring higher; ties count one half.
double auroc(std::span<const double> positive, std::span<const double> negative);
/// Step-integrated area under precision-recall, positives scoring higher.
double average_precision(std::span<const double> positive, std::span<const double> negative);

/// ID examples are the positive class. Throws UndefinedMetricError unless
/// both ID and OOD examples are present.
OodMetrics ood_metrics(std::span<const ScoredExample> scores);

/// `example_id,label,e_0,...,e_{d-1}`.
std::string embeddings_csv(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels);

struct AttackReportRow {
  double epsilon = 0.0;
  double clean_err = 0.0;
  double fgsm_err = 0.0;
  double pgd_err = 0.0;
};

/// `epsilon,clean_err,fgsm_err,pgd_err`.
std::string attack_report_csv(const std::vector<AttackReportRow>& rows);

/// Clean, FGSM and PGD error at one radius. PGD uses `pgd` with its epsilon
/// replaced by `epsilon`.
AttackReportRow attack_row(const ModelParams& params, const Dataset& data, double epsilon,
                           const AttackConfig& pgd, Rng& rng);

}  // namespace multimix
