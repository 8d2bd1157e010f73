#include "multimix/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "multimix/error.hpp"
#include "multimix/eval.hpp"
#include "multimix/io.hpp"

namespace multimix {

void ema_update(TeacherState& teacher, const ModelParams& student) {
  if (!teacher.shadow.same_shape(student)) throw ShapeError("teacher/student shape mismatch");
  const double mu = teacher.ema_momentum;
  auto shadow = teacher.shadow.tensors();
  const auto live = student.tensors();
  for (std::size_t t = 0; t < shadow.size(); ++t)
    for (std::size_t i = 0; i < shadow[t].size(); ++i)
      // equal entries are skipped so the fixed point holds exactly under rounding
      if (shadow[t][i] != live[t][i]) shadow[t][i] = mu * shadow[t][i] + (1.0 - mu) * live[t][i];
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be at least 1");
  if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
  if (tuples < 1) throw ParameterError("tuples must be at least 1");
  alpha.validate();
  if (input_alpha) input_alpha->validate();
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0,1]");
  if (!(mix_probability >= 0.0 && mix_probability <= 1.0))
    throw ParameterError("mix_probability must lie in [0,1]");
  if (!(lr >= 0.0)) throw ParameterError("lr must be nonnegative");
  if (!(lr_decay > 0.0)) throw ParameterError("lr_decay must be positive");
  for (std::size_t k = 1; k < lr_milestones.size(); ++k)
    if (lr_milestones[k] <= lr_milestones[k - 1])
      throw ParameterError("lr_milestones must be strictly ascending");
  if (!(momentum >= 0.0)) throw ParameterError("momentum must be nonnegative");
  if (!(weight_decay >= 0.0)) throw ParameterError("weight_decay must be nonnegative");
  if (!(ema_momentum >= 0.0 && ema_momentum <= 1.0))
    throw ParameterError("ema_momentum must lie in [0,1]");
  augmentation.validate();
}

double TrainConfig::lr_at(std::size_t epoch) const {
  double rate = lr;
  for (auto milestone : lr_milestones)
    if (epoch >= milestone) rate *= lr_decay;
  return rate;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> make_views(const Eigen::MatrixXd& inputs,
                                                       const AugmentationConfig& aug, Rng& rng) {
  aug.validate();
  if (aug.is_identity()) return {inputs, inputs};
  const auto transform = [&](Eigen::MatrixXd x) {
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      for (Eigen::Index k = 0; k < x.rows(); ++k) {
        if (aug.gaussian_sigma > 0.0) x(k, i) += aug.gaussian_sigma * rng.normal();
        if (aug.dropout_p > 0.0 && rng.bernoulli(aug.dropout_p)) x(k, i) = 0.0;
      }
    }
    return x;
  };
  Eigen::MatrixXd first = transform(inputs);
  Eigen::MatrixXd second = transform(inputs);
  return {std::move(first), std::move(second)};
}

TrainState TrainState::start(ModelParams initial, double ema_momentum) {
  TrainState state;
  state.velocity = ModelParams::zeros_like(initial);
  state.teacher = TeacherState{initial, ema_momentum};
  state.student = std::move(initial);
  return state;
}

StepResult train_step(TrainState& state, const LabeledBatch& batch, const ModelConfig& model,
                      const TrainConfig& cfg, double lr, Rng& rng, const StepOverrides* overrides) {
  StepResult result;
  result.branch = cfg.mix_mode;
  if (cfg.mix_mode == MixMode::multimix)
    result.branch = rng.uniform() < cfg.mix_probability ? MixMode::multimix : MixMode::input;

  MixSpec spec;
  spec.mode = result.branch;
  spec.site = model.mix_layer_index;
  spec.tuples = cfg.tuples;
  spec.alpha = result.branch == MixMode::input && cfg.input_alpha ? *cfg.input_alpha : cfg.alpha;
  spec.dense = cfg.dense;
  spec.share_lambda_across_positions = cfg.share_lambda_across_positions;
  spec.attention = cfg.attention;

  Eigen::MatrixXd student_view;
  Eigen::MatrixXd teacher_view;
  if (cfg.distil) {
    std::tie(student_view, teacher_view) = make_views(batch.inputs, cfg.augmentation, rng);
  }
  const Eigen::MatrixXd& inputs = cfg.distil ? student_view : batch.inputs;

  MixDraw draw = draw_mixing(spec, state.student, batch.size(), rng);
  if (overrides && overrides->lambda) {
    draw.lambdas = {*overrides->lambda};
    draw.per_position = false;
  }

  LossSpec loss;
  loss.gamma = cfg.distil ? cfg.gamma : 1.0;
  const auto plan = make_plan(state.student, inputs, batch.targets, draw, spec, loss,
                              cfg.distil ? &state.teacher.shadow : nullptr,
                              cfg.distil ? &teacher_view : nullptr);
  LossAndGradients out;
  try {
    out = forward_backward(state.student, inputs, plan);
  } catch (const NumericError& e) {
    throw NumericError(std::string("train_step (branch ") + std::string(to_string(result.branch)) +
                       ", lr " + io::format_double(lr) + "): " + e.what());
  }
  sgd_step(state.student, out.grads, state.velocity, {lr, cfg.momentum, cfg.weight_decay});
  ema_update(state.teacher, state.student);
  result.loss = out.loss;
  return result;
}

MetricsLog::MetricsLog(const MetricsLog& other) : rows_(other.rows()) {}

MetricsLog& MetricsLog::operator=(const MetricsLog& other) {
  if (this != &other) {
    auto copy = other.rows();
    std::lock_guard lock(mutex_);
    rows_ = std::move(copy);
  }
  return *this;
}

void MetricsLog::append(const EpochMetrics& row) {
  std::lock_guard lock(mutex_);
  rows_.push_back(row);
}

std::vector<EpochMetrics> MetricsLog::rows() const {
  std::lock_guard lock(mutex_);
  return rows_;
}

std::string MetricsLog::to_csv() const {
  std::string out = "epoch,train_loss,test_top1_error,lr\n";
  for (const auto& row : rows()) {
    out += std::to_string(row.epoch) + "," + io::format_double(row.train_loss) + "," +
           io::format_double(row.test_top1_error) + "," + io::format_double(row.lr) + "\n";
  }
  return out;
}

FitResult fit(const Dataset& train, const Dataset& test, const ModelConfig& model,
              const TrainConfig& cfg, const std::function<void(const EpochMetrics&)>& on_epoch) {
  cfg.validate();
  model.validate();
  if (train.size() == 0) throw ParameterError("cannot fit an empty dataset");
  if (train.dim() != model.input_dim)
    throw ShapeError("training inputs have dimension " + std::to_string(train.dim()) +
                     ", model expects " + std::to_string(model.input_dim));

  if (train.classes > model.classes)
    throw ShapeError("dataset has more classes than the model");
  Dataset data = train;
  data.classes = static_cast<int>(model.classes);

  Rng init_rng = Rng(cfg.seed).split(0);
  Rng rng = Rng(cfg.seed).split(1);
  auto state = TrainState::start(init_params(model, init_rng), cfg.ema_momentum);
  const auto test_targets = one_hot(test.labels, static_cast<int>(model.classes));

  FitResult result;
  std::vector<std::size_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);

    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::vector<std::size_t> indices(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(stop));
      const auto batch = data.batch(indices);
      loss_sum += train_step(state, batch, model, cfg, lr, rng).loss;
      ++steps;
    }

    EpochMetrics row;
    row.epoch = epoch + 1;
    row.train_loss = loss_sum / static_cast<double>(steps);
    row.test_top1_error =
        test.size() > 0 ? top1_error(predict_proba(state.student, test.inputs), test_targets) : 0.0;
    row.lr = lr;
    result.log.append(row);
    if (on_epoch) on_epoch(row);
  }
  result.student = std::move(state.student);
  result.teacher = std::move(state.teacher.shadow);
  return result;
}

}  // namespace multimix
