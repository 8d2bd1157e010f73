#include "multimix/mixer.hpp"

#include <string>

#include "multimix/error.hpp"

namespace multimix {
namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ParameterError("lambda must lie in [0,1], got " + std::to_string(lambda));
}

void check_columns(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()) + " columns");
}

// Column i of the result is lambda * x_i + (1 - lambda) * x_perm(i).
Eigen::MatrixXd pair_mix(const Eigen::MatrixXd& x, const Permutation& perm, double lambda) {
  if (perm.size() != static_cast<std::size_t>(x.cols()))
    throw ShapeError("permutation of size " + std::to_string(perm.size()) + " for batch of " +
                     std::to_string(x.cols()));
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const auto partner = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
    if (partner == i)
      out.col(i) = x.col(i);
    else
      out.col(i) = lambda * x.col(i) + (1.0 - lambda) * x.col(partner);
  }
  return out;
}

}  // namespace

DenseEmbeddingBatch::DenseEmbeddingBatch(std::vector<Eigen::MatrixXd> positions)
    : positions_(std::move(positions)) {
  for (const auto& block : positions_) {
    if (block.rows() != positions_.front().rows() || block.cols() != positions_.front().cols())
      throw ShapeError("dense embedding positions must share d and m");
  }
}

DenseEmbeddingBatch DenseEmbeddingBatch::from_examples(const std::vector<Eigen::MatrixXd>& examples) {
  if (examples.empty()) return {};
  const Eigen::Index d = examples.front().rows();
  const Eigen::Index r = examples.front().cols();
  const auto m = static_cast<Eigen::Index>(examples.size());
  std::vector<Eigen::MatrixXd> positions(static_cast<std::size_t>(r), Eigen::MatrixXd(d, m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& block = examples[static_cast<std::size_t>(i)];
    if (block.rows() != d || block.cols() != r)
      throw ShapeError("dense example blocks must share d and r");
    for (Eigen::Index j = 0; j < r; ++j) positions[static_cast<std::size_t>(j)].col(i) = block.col(j);
  }
  return DenseEmbeddingBatch(std::move(positions));
}

DenseEmbeddingBatch DenseEmbeddingBatch::from_stacked(const Eigen::MatrixXd& stacked,
                                                      Eigen::Index resolution) {
  if (resolution < 1 || stacked.rows() % resolution != 0)
    throw ShapeError("stacked rows " + std::to_string(stacked.rows()) +
                     " not divisible by resolution " + std::to_string(resolution));
  const Eigen::Index d = stacked.rows() / resolution;
  std::vector<Eigen::MatrixXd> positions;
  positions.reserve(static_cast<std::size_t>(resolution));
  for (Eigen::Index j = 0; j < resolution; ++j) positions.emplace_back(stacked.middleRows(j * d, d));
  return DenseEmbeddingBatch(std::move(positions));
}

Eigen::MatrixXd DenseEmbeddingBatch::example(Eigen::Index i) const {
  Eigen::MatrixXd block(dim(), resolution());
  for (Eigen::Index j = 0; j < resolution(); ++j) block.col(j) = position(j).col(i);
  return block;
}

std::vector<Eigen::MatrixXd> DenseEmbeddingBatch::examples() const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(batch_size()));
  for (Eigen::Index i = 0; i < batch_size(); ++i) out.push_back(example(i));
  return out;
}

Eigen::MatrixXd DenseEmbeddingBatch::stacked() const {
  Eigen::MatrixXd out(dim() * resolution(), batch_size());
  for (Eigen::Index j = 0; j < resolution(); ++j) out.middleRows(j * dim(), dim()) = position(j);
  return out;
}

LabeledBatch input_mixup(const LabeledBatch& batch, const Permutation& perm, double lambda) {
  check_lambda(lambda);
  check_columns(batch.inputs, batch.targets, "input_mixup inputs/targets");
  return {pair_mix(batch.inputs, perm, lambda), pair_mix(batch.targets, perm, lambda)};
}

MixOutput pairwise_interpolate(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& targets,
                               const Permutation& perm, double lambda) {
  check_lambda(lambda);
  check_columns(embeddings, targets, "pairwise_interpolate embeddings/targets");
  MixOutput out;
  out.embeddings.push_back(pair_mix(embeddings, perm, lambda));
  out.targets.push_back(pair_mix(targets, perm, lambda));
  out.loss_weights.push_back(Eigen::VectorXd::Ones(embeddings.cols()));
  return out;
}

MixOutput multimix_interpolate(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& targets,
                               const InterpolationMatrix& lambda) {
  check_columns(embeddings, targets, "multimix_interpolate embeddings/targets");
  if (lambda.rows() != embeddings.cols())
    throw ShapeError("interpolation matrix has " + std::to_string(lambda.rows()) +
                     " rows for a batch of " + std::to_string(embeddings.cols()));
  MixOutput out;
  out.embeddings.push_back(embeddings * lambda.weights);
  out.targets.push_back(targets * lambda.weights);
  out.loss_weights.push_back(Eigen::VectorXd::Ones(lambda.cols()));
  return out;
}

ScaledInterpolation dense_scale_normalize(const Eigen::MatrixXd& lambda,
                                          const Eigen::Ref<const Eigen::VectorXd>& attention) {
  if (attention.size() != lambda.rows())
    throw ShapeError("attention of size " + std::to_string(attention.size()) + " for " +
                     std::to_string(lambda.rows()) + " interpolation rows");
  for (Eigen::Index i = 0; i < attention.size(); ++i) {
    if (!(attention(i) >= 0.0)) throw ParameterError("attention entries must be nonnegative");
  }
  ScaledInterpolation out;
  out.scaled = attention.asDiagonal() * lambda;
  out.mass = out.scaled.colwise().sum().transpose();
  out.normalized.resize(lambda.rows(), lambda.cols());
  for (Eigen::Index k = 0; k < lambda.cols(); ++k)
    out.normalized.col(k) = out.scaled.col(k) / std::max(out.mass(k), kNormalizationGuard);
  return out;
}

MixOutput dense_multimix_interpolate(const DenseEmbeddingBatch& embeddings,
                                     const Eigen::MatrixXd& targets,
                                     const std::vector<InterpolationMatrix>& lambdas,
                                     const std::vector<Eigen::VectorXd>& attention) {
  const Eigen::Index r = embeddings.resolution();
  if (static_cast<Eigen::Index>(lambdas.size()) != r ||
      static_cast<Eigen::Index>(attention.size()) != r)
    throw ShapeError("dense mixing needs one interpolation matrix and one attention vector per "
                     "position (r = " + std::to_string(r) + ")");
  if (targets.cols() != embeddings.batch_size())
    throw ShapeError("dense targets/embeddings batch size mismatch");
  MixOutput out;
  for (Eigen::Index j = 0; j < r; ++j) {
    const auto& lambda = lambdas[static_cast<std::size_t>(j)];
    if (lambda.rows() != embeddings.batch_size() || lambda.cols() != lambdas.front().cols())
      throw ShapeError("interpolation matrices must all be m x n");
    const auto scaled = dense_scale_normalize(lambda.weights, attention[static_cast<std::size_t>(j)]);
    out.embeddings.push_back(embeddings.position(j) * scaled.normalized);
    out.targets.push_back(targets * scaled.normalized);
    out.loss_weights.push_back(scaled.mass);
  }
  return out;
}

}  // namespace multimix
