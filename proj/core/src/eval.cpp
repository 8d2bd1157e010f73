#include "multimix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "multimix/error.hpp"
#include "multimix/io.hpp"

namespace multimix {
namespace {

Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out = z;
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const double norm = z.col(k).norm();
    if (norm > 0.0) out.col(k) /= norm;
  }
  return out;
}

Eigen::MatrixXd sign(const Eigen::MatrixXd& g) {
  return g.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

void check_box(const DataBox& box, Eigen::Index dim) {
  if (box.lo.size() != dim || box.hi.size() != dim) throw ShapeError("data box dimension mismatch");
}

Eigen::MatrixXd clip(Eigen::MatrixXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  for (Eigen::Index k = 0; k < x.cols(); ++k) x.col(k) = x.col(k).cwiseMax(lo).cwiseMin(hi);
  return x;
}

}  // namespace

double top1_error(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& targets) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols())
    throw ShapeError("top1_error: shape mismatch");
  if (probs.cols() == 0) return 0.0;
  const auto predicted = argmax_columns(probs);
  const auto truth = argmax_columns(targets);
  std::size_t wrong = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) wrong += predicted[k] != truth[k];
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

double alignment(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != embeddings.cols())
    throw ShapeError("alignment: one label per embedding is required");
  const Eigen::MatrixXd z = normalize_columns(embeddings);
  double total = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < z.cols(); ++i)
    for (Eigen::Index j = i + 1; j < z.cols(); ++j) {
      if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) continue;
      total += (z.col(i) - z.col(j)).squaredNorm();
      ++pairs;
    }
  if (pairs == 0) throw UndefinedMetricError("alignment needs at least one same-class pair");
  return total / static_cast<double>(pairs);
}

double uniformity(const Eigen::MatrixXd& embeddings, double t) {
  if (embeddings.cols() < 2) throw UndefinedMetricError("uniformity needs at least two embeddings");
  const Eigen::MatrixXd z = normalize_columns(embeddings);
  double total = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < z.cols(); ++i)
    for (Eigen::Index j = i + 1; j < z.cols(); ++j, ++pairs)
      total += std::exp(-t * (z.col(i) - z.col(j)).squaredNorm());
  return std::log(total / static_cast<double>(pairs));
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0)) throw ParameterError("attack epsilon must be nonnegative");
  if (kind == Kind::pgd) {
    if (!(step_size > 0.0)) throw ParameterError("PGD step size must be positive");
    if (iterations < 1) throw ParameterError("PGD needs at least one iteration");
  }
}

Eigen::MatrixXd fgsm_attack(const ModelParams& params, const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& targets, double epsilon, const DataBox& box) {
  if (!(epsilon >= 0.0)) throw ParameterError("attack epsilon must be nonnegative");
  check_box(box, inputs.rows());
  if (epsilon == 0.0) return inputs;
  const Eigen::MatrixXd grad = input_gradient(params, inputs, targets);
  return clip(inputs + epsilon * sign(grad), box.lo, box.hi);
}

Eigen::MatrixXd pgd_attack(const ModelParams& params, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& targets, const AttackConfig& cfg,
                           const DataBox& box, Rng& rng) {
  cfg.validate();
  check_box(box, inputs.rows());
  if (cfg.epsilon == 0.0) return inputs;
  // Project onto the epsilon ball, then clip to the box. When an input lies
  // outside the box the two sets may not meet and the box wins.
  const Eigen::MatrixXd lo = inputs.array() - cfg.epsilon;
  const Eigen::MatrixXd hi = inputs.array() + cfg.epsilon;
  const auto project = [&](const Eigen::MatrixXd& x) { return clip(x.cwiseMax(lo).cwiseMin(hi), box.lo, box.hi); };

  Eigen::MatrixXd x = inputs;
  if (cfg.random_start) {
    for (Eigen::Index k = 0; k < x.cols(); ++k)
      for (Eigen::Index d = 0; d < x.rows(); ++d) x(d, k) += rng.uniform(-cfg.epsilon, cfg.epsilon);
    x = project(std::move(x));
  }
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Eigen::MatrixXd grad = input_gradient(params, x, targets);
    x = project(x + cfg.step_size * sign(grad));
  }
  return x;
}

std::vector<ScoredExample> score_examples(const ModelParams& params, const Eigen::MatrixXd& inputs,
                                          bool is_id) {
  const Eigen::MatrixXd probs = predict_proba(params, inputs);
  std::vector<ScoredExample> out;
  out.reserve(static_cast<std::size_t>(probs.cols()));
  for (Eigen::Index k = 0; k < probs.cols(); ++k) out.push_back({probs.col(k).maxCoeff(), is_id});
  return out;
}

double auroc(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty())
    throw UndefinedMetricError("AUROC needs both positive and negative examples");
  // Mann-Whitney U with mid-ranks for ties.
  std::vector<std::pair<double, bool>> all;
  all.reserve(positive.size() + negative.size());
  for (double s : positive) all.emplace_back(s, true);
  for (double s : negative) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second) rank_sum += mid_rank;
    i = j;
  }
  const auto np = static_cast<double>(positive.size());
  const auto nn = static_cast<double>(negative.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double average_precision(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty()) throw UndefinedMetricError("average precision needs positive examples");
  // Tallies per distinct score, visited from the highest threshold down.
  std::map<double, std::pair<std::size_t, std::size_t>, std::greater<>> tally;
  for (double s : positive) ++tally[s].first;
  for (double s : negative) ++tally[s].second;
  const auto np = static_cast<double>(positive.size());
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, area = 0.0;
  for (const auto& [score, counts] : tally) {
    tp += static_cast<double>(counts.first);
    fp += static_cast<double>(counts.second);
    const double recall = tp / np;
    area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return area;
}

OodMetrics ood_metrics(std::span<const ScoredExample> scores) {
  std::vector<double> id, ood;
  for (const auto& s : scores) (s.is_id ? id : ood).push_back(s.confidence);
  if (id.empty() || ood.empty())
    throw UndefinedMetricError("OOD metrics need both in- and out-of-distribution examples");

  OodMetrics out;
  out.auroc = auroc(id, ood);
  out.aupr_id = average_precision(id, ood);
  std::vector<double> neg_id, neg_ood;
  for (double s : id) neg_id.push_back(-s);
  for (double s : ood) neg_ood.push_back(-s);
  out.aupr_ood = average_precision(neg_ood, neg_id);

  // Predict ID when confidence >= threshold; sweep every distinct score plus
  // a threshold above all of them.
  std::vector<double> thresholds(id);
  thresholds.insert(thresholds.end(), ood.begin(), ood.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::sort(id.begin(), id.end());
  std::sort(ood.begin(), ood.end());
  double best = 0.5;
  for (double tau : thresholds) {
    const auto id_kept = static_cast<double>(id.end() - std::lower_bound(id.begin(), id.end(), tau));
    const auto ood_kept =
        static_cast<double>(ood.end() - std::lower_bound(ood.begin(), ood.end(), tau));
    const double tpr = id_kept / static_cast<double>(id.size());
    const double tnr = 1.0 - ood_kept / static_cast<double>(ood.size());
    best = std::max(best, 0.5 * (tpr + tnr));
  }
  out.detection_accuracy = 100.0 * best;
  return out;
}

std::string embeddings_csv(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != embeddings.cols())
    throw ShapeError("embeddings_csv: one label per embedding is required");
  std::string out = "example_id,label";
  for (Eigen::Index k = 0; k < embeddings.rows(); ++k) out += ",e_" + std::to_string(k);
  out += '\n';
  for (Eigen::Index i = 0; i < embeddings.cols(); ++i) {
    out += std::to_string(i) + "," + std::to_string(labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < embeddings.rows(); ++k) out += "," + io::format_double(embeddings(k, i));
    out += '\n';
  }
  return out;
}

std::string attack_report_csv(const std::vector<AttackReportRow>& rows) {
  std::string out = "epsilon,clean_err,fgsm_err,pgd_err\n";
  for (const auto& row : rows)
    out += io::format_double(row.epsilon) + "," + io::format_double(row.clean_err) + "," +
           io::format_double(row.fgsm_err) + "," + io::format_double(row.pgd_err) + "\n";
  return out;
}

AttackReportRow attack_row(const ModelParams& params, const Dataset& data, double epsilon,
                           const AttackConfig& pgd, Rng& rng) {
  const Eigen::MatrixXd targets = one_hot(data.labels, static_cast<int>(params.classes()));
  const auto box = DataBox::of(data);
  AttackReportRow row;
  row.epsilon = epsilon;
  row.clean_err = top1_error(predict_proba(params, data.inputs), targets);
  row.fgsm_err =
      top1_error(predict_proba(params, fgsm_attack(params, data.inputs, targets, epsilon, box)), targets);
  AttackConfig cfg = pgd;
  cfg.kind = AttackConfig::Kind::pgd;
  cfg.epsilon = epsilon;
  row.pgd_err = top1_error(
      predict_proba(params, pgd_attack(params, data.inputs, targets, cfg, box, rng)), targets);
  return row;
}

}  // namespace multimix
