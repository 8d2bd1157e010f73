#include "multimix/data.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "multimix/error.hpp"
#include "multimix/io.hpp"

namespace multimix {

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::ood: return "ood";
  }
  return "?";
}

void Dataset::recompute_box() {
  if (inputs.cols() == 0) {
    box_min = Eigen::VectorXd::Zero(inputs.rows());
    box_max = Eigen::VectorXd::Zero(inputs.rows());
    return;
  }
  box_min = inputs.rowwise().minCoeff();
  box_max = inputs.rowwise().maxCoeff();
}

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != inputs.cols())
    throw ShapeError("dataset has " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(inputs.cols()) + " inputs");
  for (int label : labels) {
    if (label < 0 || label >= classes)
      throw ParameterError("label " + std::to_string(label) + " outside [0, " +
                           std::to_string(classes) + ")");
  }
  if (box_min.size() != inputs.rows() || box_max.size() != inputs.rows())
    throw ShapeError("data box dimension mismatch");
  for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
    if ((inputs.col(i).array() < box_min.array()).any() ||
        (inputs.col(i).array() > box_max.array()).any())
      throw ParameterError("input " + std::to_string(i) + " lies outside the data box");
  }
}

LabeledBatch Dataset::batch(const std::vector<std::size_t>& indices) const {
  LabeledBatch out;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(indices.size()));
  std::vector<int> picked;
  picked.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.inputs.col(static_cast<Eigen::Index>(k)) = inputs.col(static_cast<Eigen::Index>(indices[k]));
    picked.push_back(labels[indices[k]]);
  }
  out.targets = one_hot(picked, classes);
  return out;
}

LabeledBatch Dataset::all() const { return {inputs, one_hot(labels, classes)}; }

void AugmentationConfig::validate() const {
  if (!(gaussian_sigma >= 0.0)) throw ParameterError("gaussian_sigma must be nonnegative");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ParameterError("dropout_p must lie in [0,1)");
}

double GaussianMixtureModel::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < centers.cols(); ++i)
    for (Eigen::Index j = i + 1; j < centers.cols(); ++j)
      best = std::min(best, (centers.col(i) - centers.col(j)).norm());
  return best;
}

double GaussianMixtureModel::bayes_error_bound() const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < centers.cols(); ++i)
    for (Eigen::Index j = 0; j < centers.cols(); ++j) {
      if (i == j) continue;
      const double half_gap = (centers.col(i) - centers.col(j)).norm() / (2.0 * spread);
      total += 0.5 * std::erfc(half_gap / std::sqrt(2.0));
    }
  return total / static_cast<double>(centers.cols());
}

GaussianMixtureModel make_gaussian_mixture(int classes, Eigen::Index dim, double spread,
                                           std::uint64_t seed) {
  if (classes < 2) throw ParameterError("a mixture needs at least two classes");
  if (dim < 1) throw ParameterError("mixture dimension must be at least 1");
  if (!(spread > 0.0)) throw ParameterError("mixture spread must be positive");
  GaussianMixtureModel model;
  model.spread = spread;
  model.centers.resize(dim, classes);
  Rng rng(Rng::derive_seed(seed, 0));
  const double min_gap = kMinCenterSeparation * spread;
  // Cube wide enough that rejection succeeds quickly; widened on failure.
  double half_width =
      min_gap * std::max(1.0, std::pow(static_cast<double>(classes), 1.0 / static_cast<double>(dim)));
  for (int c = 0; c < classes;) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      Eigen::VectorXd candidate(dim);
      for (Eigen::Index k = 0; k < dim; ++k) candidate(k) = rng.uniform(-half_width, half_width);
      placed = true;
      for (int prev = 0; prev < c; ++prev) {
        if ((candidate - model.centers.col(prev)).norm() < min_gap) {
          placed = false;
          break;
        }
      }
      if (placed) model.centers.col(c) = candidate;
    }
    if (placed)
      ++c;
    else
      half_width *= 1.5;
  }
  return model;
}

Dataset sample_gaussian_mixture(const GaussianMixtureModel& model, std::size_t per_class,
                                std::uint64_t seed, Split split) {
  if (per_class == 0) throw ParameterError("cannot generate an empty dataset (per_class = 0)");
  Rng rng(seed);
  const int c = model.classes();
  Dataset out;
  out.classes = c;
  out.split = split;
  out.inputs.resize(model.dim(), static_cast<Eigen::Index>(per_class) * c);
  out.labels.reserve(per_class * static_cast<std::size_t>(c));
  Eigen::Index col = 0;
  for (int label = 0; label < c; ++label) {
    for (std::size_t k = 0; k < per_class; ++k, ++col) {
      for (Eigen::Index d = 0; d < model.dim(); ++d)
        out.inputs(d, col) = model.centers(d, label) + model.spread * rng.normal();
      out.labels.push_back(label);
    }
  }
  out.recompute_box();
  return out;
}

Dataset gen_gaussian_mixture(int classes, std::size_t per_class, Eigen::Index dim, double spread,
                             std::uint64_t seed) {
  const auto model = make_gaussian_mixture(classes, dim, spread, seed);
  return sample_gaussian_mixture(model, per_class, Rng::derive_seed(seed, 1));
}

Dataset gen_ood_shift(const Dataset& dataset, double shift, std::uint64_t seed) {
  if (!(shift > 0.0)) throw ParameterError("OOD shift must be positive");
  Rng rng(seed);
  Eigen::VectorXd direction(dataset.dim());
  do {
    for (Eigen::Index k = 0; k < direction.size(); ++k) direction(k) = rng.normal();
  } while (direction.norm() == 0.0);
  direction.normalize();
  Dataset out = dataset;
  out.inputs.colwise() += shift * direction;
  out.split = Split::ood;
  out.recompute_box();
  return out;
}

Eigen::MatrixXd one_hot(const std::vector<int>& labels, int classes) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(classes, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] < 0 || labels[k] >= classes)
      throw ParameterError("label " + std::to_string(labels[k]) + " outside [0, " +
                           std::to_string(classes) + ")");
    out(labels[k], static_cast<Eigen::Index>(k)) = 1.0;
  }
  return out;
}

std::vector<int> argmax_columns(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.cols()));
  for (Eigen::Index k = 0; k < scores.cols(); ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.rows(); ++c)
      if (scores(c, k) > scores(best, k)) best = c;
    out[static_cast<std::size_t>(k)] = static_cast<int>(best);
  }
  return out;
}

Dataset parse_csv(std::string_view text, std::string_view label_column, const std::string& source) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  const auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      const auto end = text.find('\n', pos);
      line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
      pos = end == std::string_view::npos ? text.size() : end + 1;
      ++line_no;
      if (!io::trim(line).empty()) return true;
    }
    return false;
  };

  std::string_view header;
  if (!next_line(header)) throw IngestionError(source, 1, "empty file (no header)");
  const auto names = io::split(io::trim(header), ',');
  std::size_t label_index = names.size();
  for (std::size_t k = 0; k < names.size(); ++k)
    if (io::trim(names[k]) == label_column) label_index = k;
  if (label_index == names.size())
    throw IngestionError(source, line_no, "unknown label column '" + std::string(label_column) + "'");
  if (names.size() < 2) throw IngestionError(source, line_no, "header has no feature columns");

  std::vector<std::vector<double>> columns;
  std::vector<int> labels;
  std::string_view line;
  while (next_line(line)) {
    const auto cells = io::split(io::trim(line), ',');
    if (cells.size() != names.size())
      throw IngestionError(source, line_no, "expected " + std::to_string(names.size()) +
                                                " cells, found " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(names.size() - 1);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k == label_index) {
        const auto label = io::parse_int(cells[k]);
        if (!label || *label < 0)
          throw IngestionError(source, line_no, "label '" + std::string(io::trim(cells[k])) +
                                                    "' is not a nonnegative integer");
        labels.push_back(static_cast<int>(*label));
      } else {
        const auto value = io::parse_double(cells[k]);
        if (!value || !std::isfinite(*value))
          throw IngestionError(source, line_no, "non-numeric cell '" +
                                                    std::string(io::trim(cells[k])) + "'");
        row.push_back(*value);
      }
    }
    columns.push_back(std::move(row));
  }
  if (columns.empty()) throw IngestionError(source, line_no, "no data rows");

  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(names.size() - 1),
                    static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i)
    for (std::size_t k = 0; k < columns[i].size(); ++k)
      out.inputs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = columns[i][k];
  out.labels = std::move(labels);
  int top = 0;
  for (int label : out.labels) top = std::max(top, label);
  out.classes = top + 1;
  out.recompute_box();
  return out;
}

Dataset load_csv(const std::filesystem::path& path, std::string_view label_column) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw IngestionError(path.string(), 0, e.what());
  }
  return parse_csv(text, label_column, path.string());
}

std::string to_csv(const Dataset& dataset) {
  std::string out = "label";
  for (Eigen::Index k = 0; k < dataset.dim(); ++k) out += ",f_" + std::to_string(k);
  out += '\n';
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    out += std::to_string(dataset.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < dataset.dim(); ++k) {
      out += ',';
      out += io::format_double(dataset.inputs(k, i));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  io::write_file_atomic(path, to_csv(dataset));
}

}  // namespace multimix
