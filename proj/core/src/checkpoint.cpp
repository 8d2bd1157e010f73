#include "multimix/checkpoint.hpp"

#include <sstream>
#include <vector>

#include "multimix/error.hpp"
#include "multimix/io.hpp"

namespace multimix {
namespace {

Eigen::Index tensor_rows(const ModelParams& p, std::size_t t) {
  const std::size_t L = p.layers.size();
  if (t < 2 * L) return t % 2 == 0 ? p.layers[t / 2].weight.rows() : p.layers[t / 2].bias.size();
  return t == 2 * L ? p.classifier.rows() : p.classifier_bias.size();
}

Eigen::Index tensor_cols(const ModelParams& p, std::size_t t) {
  const std::size_t L = p.layers.size();
  if (t < 2 * L) return t % 2 == 0 ? p.layers[t / 2].weight.cols() : 1;
  return t == 2 * L ? p.classifier.cols() : 1;
}

// Flat spans are column-major (Eigen default); the file is row-major.
double& at(std::span<double> data, Eigen::Index rows, Eigen::Index i, Eigen::Index j) {
  return data[static_cast<std::size_t>(j * rows + i)];
}

}  // namespace

std::string to_checkpoint_text(const ModelParams& params) {
  const auto cfg = params.config();
  std::string out = "multimix-checkpoint " + std::to_string(kCheckpointVersion) + "\n";
  out += "input_dim " + std::to_string(cfg.input_dim) + "\n";
  out += "hidden ";
  for (std::size_t k = 0; k < cfg.hidden.size(); ++k)
    out += (k ? "," : "") + std::to_string(cfg.hidden[k]);
  out += cfg.hidden.empty() ? "-\n" : "\n";
  out += "embed_dim " + std::to_string(cfg.embed_dim) + "\n";
  out += "classes " + std::to_string(cfg.classes) + "\n";
  out += "resolution " + std::to_string(cfg.resolution) + "\n";

  auto copy = params;
  const auto tensors = copy.tensors();
  const auto names = params.tensor_names();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const auto rows = tensor_rows(params, t);
    const auto cols = tensor_cols(params, t);
    out += "tensor " + names[t] + " " + std::to_string(rows) + " " + std::to_string(cols) + "\n";
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (j) out += ' ';
        out += io::format_double(at(tensors[t], rows, i, j));
      }
      out += '\n';
    }
  }
  out += "end\n";
  return out;
}

ModelParams parse_checkpoint(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  const auto fail = [&](const std::string& what) -> Error {
    return Error(source + ": malformed checkpoint: " + what);
  };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "multimix-checkpoint") throw fail("missing header");
  if (version != kCheckpointVersion) throw fail("unsupported version " + std::to_string(version));

  ModelConfig cfg;
  const auto read_index = [&](const char* key) {
    long long value = 0;
    if (!(in >> word >> value) || word != key) throw fail(std::string("expected ") + key);
    return static_cast<Eigen::Index>(value);
  };
  cfg.input_dim = read_index("input_dim");
  if (!(in >> word) || word != "hidden" || !(in >> word)) throw fail("expected hidden");
  cfg.hidden.clear();
  if (word != "-") {
    for (auto part : io::split(word, ',')) {
      const auto width = io::parse_int(part);
      if (!width) throw fail("bad hidden width");
      cfg.hidden.push_back(static_cast<Eigen::Index>(*width));
    }
  }
  cfg.embed_dim = read_index("embed_dim");
  cfg.classes = read_index("classes");
  cfg.resolution = read_index("resolution");
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw fail(e.what());
  }

  Rng unused(0);
  ModelParams params = init_params(cfg, unused);
  auto tensors = params.tensors();
  const auto names = params.tensor_names();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    std::string name;
    long long rows = 0, cols = 0;
    if (!(in >> word >> name >> rows >> cols) || word != "tensor" || name != names[t])
      throw fail("expected tensor " + names[t]);
    if (rows != tensor_rows(params, t) || cols != tensor_cols(params, t))
      throw fail("tensor " + name + " has unexpected shape");
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> word)) throw fail("truncated tensor " + name);
        const auto value = io::parse_double(word);
        if (!value) throw fail("bad value '" + word + "' in " + name);
        at(tensors[t], rows, i, j) = *value;
      }
  }
  if (!(in >> word) || word != "end") throw fail("missing end marker");
  return params;
}

void write_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  io::write_file_atomic(path, to_checkpoint_text(params));
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(io::read_file(path), path.string());
}

}  // namespace multimix
