#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "multimix/data.hpp"
#include "multimix/model.hpp"

namespace multimix {

/// EMA shadow of the student. Never receives gradient updates.
struct TeacherState {
  ModelParams shadow;
  double ema_momentum = 0.99;
};

/// shadow <- mu shadow + (1 - mu) student, tensor by tensor.
void ema_update(TeacherState& teacher, const ModelParams& student);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  std::size_t tuples = 1000;
  AlphaPolicy alpha = AlphaPolicy::uniform_range(0.5, 2.0);
  /// Alpha of the Beta draw in the input-mixup branch; defaults to `alpha`.
  std::optional<AlphaPolicy> input_alpha;
  MixMode mix_mode = MixMode::multimix;
  bool dense = false;
  bool distil = false;
  double gamma = 0.5;
  /// Probability of the MultiMix branch; input mixup fires otherwise.
  double mix_probability = 0.5;
  double lr = 0.1;
  double lr_decay = 0.1;
  std::vector<std::size_t> lr_milestones;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  AttentionConfig attention;
  bool share_lambda_across_positions = false;
  double ema_momentum = 0.99;
  AugmentationConfig augmentation;

  void validate() const;
  /// Learning rate in effect during (0-based) `epoch`.
  double lr_at(std::size_t epoch) const;
};

/// Two independently augmented views of the same inputs. No randomness is
/// consumed for an identity augmentation.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> make_views(const Eigen::MatrixXd& inputs,
                                                       const AugmentationConfig& aug, Rng& rng);

struct StepOverrides {
  /// Replaces the sampled interpolation (shared at the configured site).
  std::optional<InterpolationMatrix> lambda;
};

struct StepResult {
  double loss = 0.0;
  MixMode branch = MixMode::erm;
};

/// Mutable state of one training run.
struct TrainState {
  ModelParams student;
  Gradients velocity;
  TeacherState teacher;

  static TrainState start(ModelParams initial, double ema_momentum);
};

/// One SGD step: branch draw, views, a single interpolation draw shared by
/// student and teacher, loss and backprop, SGD on the student, EMA on the
/// teacher. Throws NumericError on a non-finite loss.
StepResult train_step(TrainState& state, const LabeledBatch& batch, const ModelConfig& model,
                      const TrainConfig& cfg, double lr, Rng& rng,
                      const StepOverrides* overrides = nullptr);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_top1_error = 0.0;
  double lr = 0.0;
};

/// Append-only epoch log; appends are serialized so sweeps can share one.
class MetricsLog {
 public:
  MetricsLog() = default;
  MetricsLog(const MetricsLog& other);
  MetricsLog& operator=(const MetricsLog& other);

  void append(const EpochMetrics& row);
  std::vector<EpochMetrics> rows() const;
  /// `epoch,train_loss,test_top1_error,lr` with round-trip number formatting.
  std::string to_csv() const;

 private:
  mutable std::mutex mutex_;
  std::vector<EpochMetrics> rows_;
};

struct FitResult {
  ModelParams student;
  ModelParams teacher;
  MetricsLog log;
};

FitResult fit(const Dataset& train, const Dataset& test, const ModelConfig& model,
              const TrainConfig& cfg,
              const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace multimix
