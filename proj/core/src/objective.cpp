#include <cmath>
#include <string>

#include "multimix/error.hpp"
#include "multimix/model.hpp"

namespace multimix {

std::string_view to_string(MixMode mode) noexcept {
  switch (mode) {
    case MixMode::erm: return "erm";
    case MixMode::input: return "input";
    case MixMode::manifold: return "manifold";
    case MixMode::multimix: return "multimix";
  }
  return "?";
}

std::optional<MixMode> parse_mix_mode(std::string_view text) noexcept {
  if (text == "erm") return MixMode::erm;
  if (text == "input") return MixMode::input;
  if (text == "manifold") return MixMode::manifold;
  if (text == "multimix") return MixMode::multimix;
  return std::nullopt;
}

MixDraw draw_mixing(const MixSpec& spec, const ModelParams& params, Eigen::Index batch_size,
                    Rng& rng) {
  if (batch_size < 1) throw ShapeError("cannot mix an empty batch");
  const std::size_t last = params.num_layers();
  MixDraw draw;
  draw.dense_loss = spec.dense;
  switch (spec.mode) {
    case MixMode::erm:
      draw.site = last;
      return draw;
    case MixMode::input:
    case MixMode::manifold: {
      draw.site = spec.mode == MixMode::input ? 0 : spec.site.value_or(last);
      const double alpha = spec.alpha.draw(rng);
      const double lambda = beta_sample(alpha, rng);
      const auto perm = random_permutation(static_cast<std::size_t>(batch_size), rng);
      auto mat = pairwise_matrix(perm, lambda);
      std::fill(mat.alphas.begin(), mat.alphas.end(), alpha);
      draw.lambdas.push_back(std::move(mat));
      break;
    }
    case MixMode::multimix: {
      draw.site = spec.site.value_or(last);
      draw.per_position = spec.dense && draw.site == last;
      const std::size_t count =
          draw.per_position && !spec.share_lambda_across_positions
              ? static_cast<std::size_t>(params.resolution)
              : 1;
      const auto m = static_cast<std::size_t>(batch_size);
      for (std::size_t j = 0; j < count; ++j)
        draw.lambdas.push_back(sample_interpolation_matrix(m, spec.tuples, spec.alpha, rng));
      if (draw.per_position && spec.share_lambda_across_positions)
        draw.lambdas.resize(static_cast<std::size_t>(params.resolution), draw.lambdas.front());
      break;
    }
  }
  if (draw.site > last) throw ParameterError("mixing site beyond the last encoder layer");
  return draw;
}

namespace {

Eigen::Index loss_blocks(const ModelParams& params, bool dense_loss) {
  return dense_loss ? params.resolution : 1;
}

// Embedding blocks that enter the classifier: all positions in dense mode,
// otherwise the position average.
std::vector<Eigen::MatrixXd> loss_embeddings(const DenseEmbeddingBatch& dense, bool dense_loss) {
  if (dense_loss) return dense.positions();
  return {pool(dense)};
}

// Shared-mixing and no-mixing draws only need the network when probabilities
// are requested; per-position draws always need it for the attention maps.
MixedForward run_draw(const ModelParams& params, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& targets, const MixDraw& draw,
                      const AttentionConfig& attention, bool with_probs) {
  if (targets.cols() != inputs.cols()) throw ShapeError("mixed_forward: batch size mismatch");
  MixedForward out;
  const Eigen::Index blocks = loss_blocks(params, draw.dense_loss);
  if (!draw.per_position) {
    Eigen::MatrixXd mixed_targets = targets;
    Eigen::MatrixXd front;
    if (!draw.lambdas.empty()) {
      const auto& lambda = draw.lambdas.front();
      if (lambda.rows() != inputs.cols()) throw ShapeError("interpolation rows != batch size");
      mixed_targets = targets * lambda.weights;
      out.mixing.push_back(lambda.weights);
      if (with_probs) front = encode_front(params, inputs, draw.site) * lambda.weights;
    } else if (with_probs) {
      front = encode_front(params, inputs, draw.site);
    }
    for (Eigen::Index b = 0; b < blocks; ++b) {
      out.targets.push_back(mixed_targets);
      out.loss_weights.push_back(Eigen::VectorXd::Ones(mixed_targets.cols()));
    }
    if (with_probs) {
      for (auto& z : loss_embeddings(encode_back(params, front, draw.site), draw.dense_loss))
        out.probs.push_back(classify(params, z));
    }
    return out;
  }

  const auto dense = encode(params, inputs);
  const Eigen::Index m = dense.batch_size();
  const Eigen::Index r = dense.resolution();
  std::vector<Eigen::VectorXd> by_position(static_cast<std::size_t>(r), Eigen::VectorXd(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd label = targets.col(i);
    const Eigen::VectorXd a = attention_map(dense.example(i), attention, &params.classifier, &label);
    for (Eigen::Index j = 0; j < r; ++j) by_position[static_cast<std::size_t>(j)](i) = a(j);
  }
  const auto mixed = dense_multimix_interpolate(dense, targets, draw.lambdas, by_position);
  for (Eigen::Index j = 0; j < r; ++j) {
    const auto& lambda = draw.lambdas[static_cast<std::size_t>(j)].weights;
    const auto scaled = dense_scale_normalize(lambda, by_position[static_cast<std::size_t>(j)]);
    out.mixing.push_back(scaled.normalized);
  }
  out.targets = mixed.targets;
  out.loss_weights = mixed.loss_weights;
  if (with_probs) out.probs = classify(params, mixed);
  return out;
}

}  // namespace

MixedForward mixed_forward(const ModelParams& params, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& targets, const MixDraw& draw,
                           const AttentionConfig& attention) {
  return run_draw(params, inputs, targets, draw, attention, true);
}

MixPlan make_plan(const ModelParams& student, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, const MixDraw& draw, const MixSpec& spec,
                  const LossSpec& loss, const ModelParams* teacher,
                  const Eigen::MatrixXd* teacher_inputs) {
  loss.validate();
  auto forward = run_draw(student, inputs, targets, draw, spec.attention, false);
  MixPlan plan;
  plan.site = draw.site;
  plan.per_position = draw.per_position;
  plan.dense_loss = draw.dense_loss || draw.per_position;
  plan.mixing = std::move(forward.mixing);
  plan.loss_weights = std::move(forward.loss_weights);
  plan.targets = std::move(forward.targets);
  plan.loss = loss;
  plan.loss.mode = draw.per_position ? LossSpec::Mode::weighted : LossSpec::Mode::plain;
  if (teacher != nullptr) {
    if (!teacher->same_shape(student)) throw ShapeError("teacher and student shapes differ");
    const Eigen::MatrixXd& views = teacher_inputs != nullptr ? *teacher_inputs : inputs;
    plan.teacher_probs = mixed_forward(*teacher, views, targets, draw, spec.attention).probs;
  }
  return plan;
}

MixPlan erm_plan(const Eigen::MatrixXd& targets, Eigen::Index resolution, bool dense_loss) {
  MixPlan plan;
  plan.dense_loss = dense_loss;
  const Eigen::Index blocks = dense_loss ? resolution : 1;
  for (Eigen::Index j = 0; j < blocks; ++j) {
    plan.targets.push_back(targets);
    plan.loss_weights.push_back(Eigen::VectorXd::Ones(targets.cols()));
  }
  return plan;
}

namespace {

struct Evaluation {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> layer_inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
  std::vector<Eigen::MatrixXd> blocks;    // classifier inputs
  std::vector<Eigen::MatrixXd> dlogits;   // filled when differentiating
  Eigen::Index embed_columns = 0;
};

Evaluation evaluate(const ModelParams& params, const Eigen::MatrixXd& inputs, const MixPlan& plan,
                    bool with_gradient) {
  const std::size_t L = params.num_layers();
  if (inputs.rows() != params.input_dim())
    throw ShapeError("inputs have " + std::to_string(inputs.rows()) + " rows, model expects " +
                     std::to_string(params.input_dim()));
  const Eigen::MatrixXd* shared =
      !plan.per_position && !plan.mixing.empty() ? &plan.mixing.front() : nullptr;
  if (shared && shared->rows() != inputs.cols())
    throw ShapeError("interpolation rows != batch size");
  if (plan.site > L) throw ParameterError("mixing site beyond the last encoder layer");

  Evaluation ev;
  ev.layer_inputs.resize(L);
  ev.pre_activations.resize(L);
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < L; ++l) {
    if (shared && l == plan.site) h = h * (*shared);
    ev.layer_inputs[l] = h;
    Eigen::MatrixXd a = params.layers[l].weight * h;
    a.colwise() += params.layers[l].bias;
    h = l + 1 < L ? a.cwiseMax(0.0) : a;
    ev.pre_activations[l] = std::move(a);
  }
  if (shared && plan.site == L) h = h * (*shared);
  ev.embed_columns = h.cols();

  const Eigen::Index d = params.embed_dim();
  const Eigen::Index r = params.resolution;
  const Eigen::Index blocks = loss_blocks(params, plan.dense_loss);
  if (static_cast<Eigen::Index>(plan.targets.size()) != blocks ||
      static_cast<Eigen::Index>(plan.loss_weights.size()) != blocks)
    throw ShapeError("plan has " + std::to_string(plan.targets.size()) + " loss blocks, model " +
                     std::to_string(blocks));
  if (plan.per_position && static_cast<Eigen::Index>(plan.mixing.size()) != r)
    throw ShapeError("per-position plan needs one mixing matrix per position");
  const bool distil = !plan.teacher_probs.empty();
  if (distil && static_cast<Eigen::Index>(plan.teacher_probs.size()) != blocks)
    throw ShapeError("teacher probabilities do not match the loss blocks");

  if (plan.dense_loss) {
    for (Eigen::Index j = 0; j < r; ++j) {
      if (plan.per_position)
        ev.blocks.push_back(h.middleRows(j * d, d) * plan.mixing[static_cast<std::size_t>(j)]);
      else
        ev.blocks.push_back(h.middleRows(j * d, d));
    }
  } else {
    Eigen::MatrixXd pooled = h.topRows(d);
    for (Eigen::Index j = 1; j < r; ++j) pooled += h.middleRows(j * d, d);
    if (r > 1) pooled /= static_cast<double>(r);
    ev.blocks.push_back(std::move(pooled));
  }

  const double gamma = plan.loss.gamma;
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    const auto& z = ev.blocks[bi];
    Eigen::MatrixXd logits = params.classifier.transpose() * z;
    logits.colwise() += params.classifier_bias;
    Eigen::MatrixXd target = plan.targets[bi];
    if (target.rows() != logits.rows() || target.cols() != logits.cols())
      throw ShapeError("plan targets do not match classifier output");
    if (distil && gamma != 1.0) target = gamma * target + (1.0 - gamma) * plan.teacher_probs[bi];
    const Eigen::VectorXd& s = plan.loss_weights[bi];
    const double total = s.sum();
    if (!(total > 0.0)) throw DegenerateWeightError("loss weights sum to a non-positive value");

    // Log-softmax from the logits: no probability floor, so saturated wrong
    // predictions still receive gradient.
    double block_loss = 0.0;
    Eigen::MatrixXd grad(logits.rows(), logits.cols());
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      const double top = logits.col(k).maxCoeff();
      const Eigen::VectorXd shifted = logits.col(k).array() - top;
      const Eigen::VectorXd e = shifted.array().exp();
      const double log_norm = std::log(e.sum());
      double column = 0.0;
      double mass = 0.0;
      for (Eigen::Index c = 0; c < logits.rows(); ++c) {
        const double t = target(c, k);
        if (t != 0.0) column -= t * (shifted(c) - log_norm);
        mass += t;
      }
      block_loss += column * s(k);
      if (with_gradient) {
        const double scale = s(k) / (total * static_cast<double>(blocks));
        for (Eigen::Index c = 0; c < logits.rows(); ++c)
          grad(c, k) = scale * (e(c) / e.sum() * mass - target(c, k));
      }
    }
    ev.loss += block_loss / total / static_cast<double>(blocks);
    if (with_gradient) ev.dlogits.push_back(std::move(grad));
  }
  if (!std::isfinite(ev.loss)) throw NumericError("non-finite loss " + std::to_string(ev.loss));
  return ev;
}

}  // namespace

double evaluate_loss(const ModelParams& params, const Eigen::MatrixXd& inputs, const MixPlan& plan) {
  return evaluate(params, inputs, plan, false).loss;
}

LossAndGradients forward_backward(const ModelParams& params, const Eigen::MatrixXd& inputs,
                                  const MixPlan& plan) {
  Evaluation ev = evaluate(params, inputs, plan, true);
  const std::size_t L = params.num_layers();
  const Eigen::Index d = params.embed_dim();
  const Eigen::Index r = params.resolution;
  const Eigen::MatrixXd* shared =
      !plan.per_position && !plan.mixing.empty() ? &plan.mixing.front() : nullptr;

  LossAndGradients out;
  out.loss = ev.loss;
  out.grads = ModelParams::zeros_like(params);

  const Eigen::Index rows = params.layers.back().weight.rows();
  const Eigen::Index cols =
      plan.per_position ? ev.layer_inputs.back().cols() : ev.embed_columns;
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(rows, cols);
  for (std::size_t b = 0; b < ev.blocks.size(); ++b) {
    const auto& dl = ev.dlogits[b];
    out.grads.classifier.noalias() += ev.blocks[b] * dl.transpose();
    out.grads.classifier_bias += dl.rowwise().sum();
    const Eigen::MatrixXd dz = params.classifier * dl;
    const auto j = static_cast<Eigen::Index>(b);
    if (plan.per_position)
      dh.middleRows(j * d, d).noalias() += dz * plan.mixing[b].transpose();
    else if (plan.dense_loss)
      dh.middleRows(j * d, d) += dz;
    else
      for (Eigen::Index q = 0; q < r; ++q) dh.middleRows(q * d, d) += dz / static_cast<double>(r);
  }

  if (shared && plan.site == L) dh = dh * shared->transpose();
  for (std::size_t l = L; l-- > 0;) {
    Eigen::MatrixXd da = l + 1 < L
        ? Eigen::MatrixXd(dh.cwiseProduct((ev.pre_activations[l].array() > 0.0).cast<double>().matrix()))
        : dh;
    out.grads.layers[l].weight.noalias() = da * ev.layer_inputs[l].transpose();
    out.grads.layers[l].bias = da.rowwise().sum();
    dh = params.layers[l].weight.transpose() * da;
    if (shared && l == plan.site) dh = dh * shared->transpose();
  }
  out.input_grad = std::move(dh);
  return out;
}

LossAndGradients forward_backward(const ModelParams& params, const LabeledBatch& batch,
                                  const MixSpec& mix, const LossSpec& loss, Rng& rng,
                                  const ModelParams* teacher, const Eigen::MatrixXd* teacher_inputs) {
  const auto draw = draw_mixing(mix, params, batch.size(), rng);
  const auto plan =
      make_plan(params, batch.inputs, batch.targets, draw, mix, loss, teacher, teacher_inputs);
  return forward_backward(params, batch.inputs, plan);
}

Eigen::MatrixXd input_gradient(const ModelParams& params, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& targets) {
  return forward_backward(params, inputs, erm_plan(targets, params.resolution)).input_grad;
}

}  // namespace multimix
