#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "multimix/model.hpp"

namespace multimix {

/// Text checkpoint: a versioned header with the model dimensions followed by
/// each tensor in row-major order. Values are written in shortest round-trip
/// form, so write/read is exact.
///
///   multimix-checkpoint 1
///   input_dim 2
///   hidden 32,32
///   embed_dim 16
///   classes 3
///   resolution 1
///   tensor layer0.weight 32 2
///   ...
///   end
inline constexpr int kCheckpointVersion = 1;

std::string to_checkpoint_text(const ModelParams& params);
ModelParams parse_checkpoint(std::string_view text, const std::string& source = "<memory>");

void write_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace multimix
