#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "multimix/data.hpp"
#include "multimix/model.hpp"
#include "multimix/trainer.hpp"

namespace multimix {

/// Where training and test data come from. With no `train_csv` both splits
/// are drawn from a seeded Gaussian mixture.
struct DataConfig {
  std::string train_csv;
  std::string test_csv;
  std::string label_column = "label";
  int classes = 3;
  Eigen::Index dim = 2;
  std::size_t per_class_train = 667;
  std::size_t per_class_test = 333;
  double spread = 1.0;
  std::uint64_t data_seed = 7;

  bool synthetic() const noexcept { return train_csv.empty(); }
  void validate() const;
};

/// Model input dimension and class count are taken from the data, so only
/// the architecture keys of ModelConfig are read from text.
struct ExperimentConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;

  void validate() const;
};

/// Keys starting with this prefix are run metadata and are skipped on parse.
inline constexpr std::string_view kManifestKeyPrefix = "manifest.";

/// Applies one `key = value` pair; unknown keys and bad values throw
/// ConfigError naming the key.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value,
                   std::size_t line = 0);

/// Flat `key = value` text, one pair per line, `#` starts a comment.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its current value; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

struct DataSplits {
  Dataset train;
  Dataset test;
};

/// Loads or generates the two splits; relative CSV paths resolve against
/// `base_dir`.
DataSplits load_data(const DataConfig& config, const std::filesystem::path& base_dir = {});

/// Shapes the model input and output to the data.
ModelConfig fit_model_to_data(ModelConfig model, const Dataset& train, const Dataset& test);

}  // namespace multimix
