#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "multimix/attention.hpp"
#include "multimix/losses.hpp"
#include "multimix/mixer.hpp"
#include "multimix/rng.hpp"
#include "multimix/sampling.hpp"

namespace multimix {

/// Shape of the encoder/classifier pair.
///
/// The encoder is an affine stack with ReLU between layers:
/// D -> hidden[0] -> ... -> hidden[k-1] -> d * r. The final layer output of
/// each example is read as a d x r block (position j in rows [j*d, (j+1)*d)),
/// which is averaged over positions when a vector embedding is needed.
struct ModelConfig {
  Eigen::Index input_dim = 2;
  std::vector<Eigen::Index> hidden{32};
  Eigen::Index embed_dim = 16;
  Eigen::Index classes = 3;
  Eigen::Index resolution = 1;
  /// Layer boundary where embeddings are interpolated; nullopt means after the
  /// last encoder layer.
  std::optional<std::size_t> mix_layer_index;

  std::size_t num_layers() const noexcept { return hidden.size() + 1; }
  std::size_t mix_site() const noexcept { return mix_layer_index.value_or(num_layers()); }
  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct ModelParams {
  std::vector<DenseLayer> layers;
  Eigen::MatrixXd classifier;       // d x c, logits = classifier^T z + bias
  Eigen::VectorXd classifier_bias;  // c
  Eigen::Index resolution = 1;

  std::size_t num_layers() const noexcept { return layers.size(); }
  Eigen::Index input_dim() const { return layers.front().weight.cols(); }
  Eigen::Index embed_dim() const noexcept { return classifier.rows(); }
  Eigen::Index classes() const noexcept { return classifier.cols(); }

  /// Every tensor as a flat span, in a fixed order (layers, then classifier).
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::vector<std::string> tensor_names() const;
  std::size_t parameter_count() const;

  bool same_shape(const ModelParams& other) const;
  static ModelParams zeros_like(const ModelParams& other);
  ModelConfig config() const;
};

/// Parameter-shaped gradient or velocity buffers.
using Gradients = ModelParams;

/// He-uniform fan-in initialization, zero biases.
ModelParams init_params(const ModelConfig& cfg, Rng& rng);

/// Layers [0, upto); upto = 0 returns the inputs unchanged.
Eigen::MatrixXd encode_front(const ModelParams& params, const Eigen::MatrixXd& inputs,
                             std::size_t upto);
/// Layers [from, L), reshaped into position-grouped d x r embeddings.
DenseEmbeddingBatch encode_back(const ModelParams& params, const Eigen::MatrixXd& activations,
                                std::size_t from);
DenseEmbeddingBatch encode(const ModelParams& params, const Eigen::MatrixXd& inputs);
/// Position-averaged d x m embeddings.
Eigen::MatrixXd pool(const DenseEmbeddingBatch& dense);
Eigen::MatrixXd embed(const ModelParams& params, const Eigen::MatrixXd& inputs);

/// Softmax(W^T z + b) per column.
Eigen::MatrixXd classify(const ModelParams& params, const Eigen::MatrixXd& embeddings);
/// Applies the classifier to every block of a mix output (1x1-convolution
/// style in the dense case).
std::vector<Eigen::MatrixXd> classify(const ModelParams& params, const MixOutput& mixed);
/// Class probabilities of the pooled embeddings, c x N.
Eigen::MatrixXd predict_proba(const ModelParams& params, const Eigen::MatrixXd& inputs);

// ---------------------------------------------------------------------------
// Training objective

enum class MixMode { erm, input, manifold, multimix };

std::string_view to_string(MixMode mode) noexcept;
std::optional<MixMode> parse_mix_mode(std::string_view text) noexcept;

struct MixSpec {
  MixMode mode = MixMode::erm;
  /// Layer boundary for manifold and MultiMix; input mixup always uses 0.
  std::optional<std::size_t> site;
  std::size_t tuples = 1000;
  AlphaPolicy alpha = AlphaPolicy::uniform_range(0.5, 2.0);
  /// Per-position loss; with MultiMix at the embedding site this also enables
  /// attention-weighted per-position interpolation.
  bool dense = false;
  /// Draw one Lambda and reuse it at every position.
  bool share_lambda_across_positions = false;
  AttentionConfig attention;
};

/// The sampled part of a mixing step, shared verbatim by student and teacher.
struct MixDraw {
  std::size_t site = 0;
  /// Empty: no mixing. One entry: shared interpolation matrix. r entries:
  /// per-position matrices rescaled by attention at the embedding site.
  std::vector<InterpolationMatrix> lambdas;
  bool per_position = false;
  bool dense_loss = false;
};

MixDraw draw_mixing(const MixSpec& spec, const ModelParams& params, Eigen::Index batch_size,
                    Rng& rng);

/// Interpolated targets and probabilities of one network under a draw.
struct MixedForward {
  std::vector<Eigen::MatrixXd> mixing;        // Lambda, or M_hat^j per position
  std::vector<Eigen::VectorXd> loss_weights;  // one per loss block
  std::vector<Eigen::MatrixXd> targets;       // Y_mix per loss block
  std::vector<Eigen::MatrixXd> probs;         // P per loss block
};

/// Runs a network through a draw. Attention (dense per-position mode) is
/// computed from this network's own unmixed embeddings and, for CAM, its own
/// classifier.
MixedForward mixed_forward(const ModelParams& params, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& targets, const MixDraw& draw,
                           const AttentionConfig& attention);

/// Everything the student loss treats as constant: mixing weights, loss
/// weights, interpolated targets and teacher probabilities.
struct MixPlan {
  std::size_t site = 0;
  bool per_position = false;
  bool dense_loss = false;
  std::vector<Eigen::MatrixXd> mixing;
  std::vector<Eigen::VectorXd> loss_weights;
  std::vector<Eigen::MatrixXd> targets;
  std::vector<Eigen::MatrixXd> teacher_probs;  // empty without distillation
  LossSpec loss;
};

MixPlan make_plan(const ModelParams& student, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, const MixDraw& draw, const MixSpec& spec,
                  const LossSpec& loss, const ModelParams* teacher = nullptr,
                  const Eigen::MatrixXd* teacher_inputs = nullptr);

/// Plan for the plain mini-batch loss with no mixing.
MixPlan erm_plan(const Eigen::MatrixXd& targets, Eigen::Index resolution, bool dense_loss = false);

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
  Eigen::MatrixXd input_grad;  // d loss / d inputs
};

/// Exact reverse-mode gradients of the plan's loss with respect to every
/// parameter and the inputs. Throws NumericError on a non-finite loss.
LossAndGradients forward_backward(const ModelParams& params, const Eigen::MatrixXd& inputs,
                                  const MixPlan& plan);
double evaluate_loss(const ModelParams& params, const Eigen::MatrixXd& inputs, const MixPlan& plan);

/// Samples a draw, builds the plan and differentiates it in one call.
LossAndGradients forward_backward(const ModelParams& params, const LabeledBatch& batch,
                                  const MixSpec& mix, const LossSpec& loss, Rng& rng,
                                  const ModelParams* teacher = nullptr,
                                  const Eigen::MatrixXd* teacher_inputs = nullptr);

/// d CE / d inputs of the unmixed model (used by the attacks).
Eigen::MatrixXd input_gradient(const ModelParams& params, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& targets);

// ---------------------------------------------------------------------------
// Optimization

struct SgdOptions {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

/// v <- mu v + g + wd p; p <- p - lr v.
void sgd_step(ModelParams& params, const Gradients& grads, Gradients& velocity,
              const SgdOptions& opts);

double relative_error(double analytic, double numeric) noexcept;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
};

/// Central differences against `analytic`. Every coordinate is checked when
/// the model has at most `max_coordinates` parameters; otherwise a seeded
/// random subsample of max(200, max_coordinates) coordinates is used.
GradCheckResult grad_check(const ModelParams& params, const Gradients& analytic,
                           const std::function<double(const ModelParams&)>& loss, double eps,
                           std::size_t max_coordinates = 4000, std::uint64_t seed = 0);

}  // namespace multimix
