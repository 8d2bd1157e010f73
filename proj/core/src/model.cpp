#include "multimix/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "multimix/error.hpp"

namespace multimix {

void ModelConfig::validate() const {
  if (input_dim < 1 || embed_dim < 1 || classes < 2)
    throw ParameterError("model needs input_dim >= 1, embed_dim >= 1 and classes >= 2");
  if (resolution < 1) throw ParameterError("spatial resolution must be at least 1");
  for (auto h : hidden) {
    if (h < 1) throw ParameterError("hidden layer sizes must be positive");
  }
  if (mix_layer_index && *mix_layer_index > num_layers())
    throw ParameterError("mix_layer_index " + std::to_string(*mix_layer_index) +
                         " outside [0, " + std::to_string(num_layers()) + "]");
}

std::vector<std::span<double>> ModelParams::tensors() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers) {
    out.emplace_back(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    out.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  out.emplace_back(classifier.data(), static_cast<std::size_t>(classifier.size()));
  out.emplace_back(classifier_bias.data(), static_cast<std::size_t>(classifier_bias.size()));
  return out;
}

std::vector<std::span<const double>> ModelParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers) {
    out.emplace_back(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    out.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  out.emplace_back(classifier.data(), static_cast<std::size_t>(classifier.size()));
  out.emplace_back(classifier_bias.data(), static_cast<std::size_t>(classifier_bias.size()));
  return out;
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out.push_back("layer" + std::to_string(l) + ".weight");
    out.push_back("layer" + std::to_string(l) + ".bias");
  }
  out.emplace_back("classifier.weight");
  out.emplace_back("classifier.bias");
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors()) total += t.size();
  return total;
}

bool ModelParams::same_shape(const ModelParams& other) const {
  if (layers.size() != other.layers.size() || resolution != other.resolution) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weight.rows() != other.layers[l].weight.rows() ||
        layers[l].weight.cols() != other.layers[l].weight.cols() ||
        layers[l].bias.size() != other.layers[l].bias.size())
      return false;
  }
  return classifier.rows() == other.classifier.rows() &&
         classifier.cols() == other.classifier.cols() &&
         classifier_bias.size() == other.classifier_bias.size();
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams out;
  out.resolution = other.resolution;
  for (const auto& layer : other.layers) {
    out.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                          Eigen::VectorXd::Zero(layer.bias.size())});
  }
  out.classifier = Eigen::MatrixXd::Zero(other.classifier.rows(), other.classifier.cols());
  out.classifier_bias = Eigen::VectorXd::Zero(other.classifier_bias.size());
  return out;
}

ModelConfig ModelParams::config() const {
  ModelConfig cfg;
  cfg.input_dim = input_dim();
  cfg.hidden.clear();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) cfg.hidden.push_back(layers[l].weight.rows());
  cfg.embed_dim = embed_dim();
  cfg.classes = classes();
  cfg.resolution = resolution;
  return cfg;
}

ModelParams init_params(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParams params;
  params.resolution = cfg.resolution;
  std::vector<Eigen::Index> widths{cfg.input_dim};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(cfg.embed_dim * cfg.resolution);

  const auto he_uniform = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double bound = std::sqrt(6.0 / static_cast<double>(cols));
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = rng.uniform(-bound, bound);
    return w;
  };
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    params.layers.push_back(
        {he_uniform(widths[l + 1], widths[l]), Eigen::VectorXd::Zero(widths[l + 1])});
  }
  // Stored d x c; fan-in of the classifier is d.
  params.classifier = he_uniform(cfg.classes, cfg.embed_dim).transpose();
  params.classifier_bias = Eigen::VectorXd::Zero(cfg.classes);
  return params;
}

namespace {

void check_input_rows(const Eigen::MatrixXd& x, Eigen::Index expected, const char* what) {
  if (x.rows() != expected)
    throw ShapeError(std::string(what) + ": expected " + std::to_string(expected) +
                     " rows, got " + std::to_string(x.rows()));
}

Eigen::MatrixXd apply_layer(const ModelParams& params, std::size_t l, const Eigen::MatrixXd& h) {
  const auto& layer = params.layers[l];
  Eigen::MatrixXd a = layer.weight * h;
  a.colwise() += layer.bias;
  if (l + 1 < params.layers.size()) a = a.cwiseMax(0.0);
  return a;
}

Eigen::Index layer_input_width(const ModelParams& params, std::size_t l) {
  return l < params.layers.size() ? params.layers[l].weight.cols()
                                  : params.layers.back().weight.rows();
}

}  // namespace

Eigen::MatrixXd encode_front(const ModelParams& params, const Eigen::MatrixXd& inputs,
                             std::size_t upto) {
  if (upto > params.num_layers())
    throw ParameterError("encode_front: layer index " + std::to_string(upto) + " out of range");
  check_input_rows(inputs, params.input_dim(), "encode_front");
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < upto; ++l) h = apply_layer(params, l, h);
  return h;
}

DenseEmbeddingBatch encode_back(const ModelParams& params, const Eigen::MatrixXd& activations,
                                std::size_t from) {
  if (from > params.num_layers())
    throw ParameterError("encode_back: layer index " + std::to_string(from) + " out of range");
  check_input_rows(activations, layer_input_width(params, from), "encode_back");
  Eigen::MatrixXd h = activations;
  for (std::size_t l = from; l < params.num_layers(); ++l) h = apply_layer(params, l, h);
  return DenseEmbeddingBatch::from_stacked(h, params.resolution);
}

DenseEmbeddingBatch encode(const ModelParams& params, const Eigen::MatrixXd& inputs) {
  return encode_back(params, encode_front(params, inputs, params.num_layers()),
                     params.num_layers());
}

Eigen::MatrixXd pool(const DenseEmbeddingBatch& dense) {
  if (dense.resolution() == 1) return dense.position(0);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dense.dim(), dense.batch_size());
  for (const auto& block : dense.positions()) sum += block;
  return sum / static_cast<double>(dense.resolution());
}

Eigen::MatrixXd embed(const ModelParams& params, const Eigen::MatrixXd& inputs) {
  return pool(encode(params, inputs));
}

Eigen::MatrixXd classify(const ModelParams& params, const Eigen::MatrixXd& embeddings) {
  check_input_rows(embeddings, params.embed_dim(), "classify");
  Eigen::MatrixXd logits = params.classifier.transpose() * embeddings;
  logits.colwise() += params.classifier_bias;
  return softmax_columns(logits);
}

std::vector<Eigen::MatrixXd> classify(const ModelParams& params, const MixOutput& mixed) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(mixed.embeddings.size());
  for (const auto& block : mixed.embeddings) out.push_back(classify(params, block));
  return out;
}

Eigen::MatrixXd predict_proba(const ModelParams& params, const Eigen::MatrixXd& inputs) {
  return classify(params, embed(params, inputs));
}

void sgd_step(ModelParams& params, const Gradients& grads, Gradients& velocity,
              const SgdOptions& opts) {
  if (!(opts.lr >= 0.0)) throw ParameterError("learning rate must be nonnegative");
  if (!params.same_shape(grads) || !params.same_shape(velocity))
    throw ShapeError("sgd_step: parameter, gradient and velocity shapes differ");
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto v = velocity.tensors();
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      v[t][i] = opts.momentum * v[t][i] + g[t][i] + opts.weight_decay * p[t][i];
      p[t][i] -= opts.lr * v[t][i];
    }
  }
}

double relative_error(double analytic, double numeric) noexcept {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult grad_check(const ModelParams& params, const Gradients& analytic,
                           const std::function<double(const ModelParams&)>& loss, double eps,
                           std::size_t max_coordinates, std::uint64_t seed) {
  if (!(eps > 0.0)) throw ParameterError("grad_check step must be positive");
  if (!params.same_shape(analytic)) throw ShapeError("grad_check: gradient shape mismatch");

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  const auto sizes = params.tensors();
  for (std::size_t t = 0; t < sizes.size(); ++t)
    for (std::size_t i = 0; i < sizes[t].size(); ++i) coords.emplace_back(t, i);
  const std::size_t budget = std::max<std::size_t>(max_coordinates, 200);
  if (coords.size() > budget) {
    Rng rng(seed);
    for (std::size_t k = 0; k < budget; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.below(coords.size() - k));
      std::swap(coords[k], coords[j]);
    }
    coords.resize(budget);
  }

  ModelParams probe = params;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  GradCheckResult result;
  for (const auto& [t, i] : coords) {
    double& x = probe_tensors[t][i];
    const double saved = x;
    x = saved + eps;
    const double up = loss(probe);
    x = saved - eps;
    const double down = loss(probe);
    x = saved;
    const double err = relative_error(grad_tensors[t][i], (up - down) / (2.0 * eps));
    if (err > result.max_relative_error || result.coordinates == 0) {
      result.max_relative_error = std::max(result.max_relative_error, err);
      result.worst_tensor = t;
      result.worst_index = i;
    }
    ++result.coordinates;
  }
  return result;
}

}  // namespace multimix
