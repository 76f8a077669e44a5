#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "actrec/models/model.hpp"

namespace actrec::train {

// Checkpoint layout:
//   bytes 0..3   "ACKP"
//   bytes 4..11  uint64 little-endian header length n
//   n bytes      UTF-8 JSON header: format_version, model_config,
//                parameters [{name, shape}] in payload order, metadata
//   then every parameter as float32 little-endian, in header order.

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  models::ModelConfig config;
  models::ModelParams params;
  nlohmann::json metadata = nlohmann::json::object();
};

std::string encode_checkpoint(const models::ModelConfig& config, const models::ModelParams& params,
                              const nlohmann::json& metadata = nlohmann::json::object());

/// `expected_kind`, when given, must match the stored model kind.
Checkpoint decode_checkpoint(std::string_view bytes, std::optional<models::ModelKind> expected_kind = std::nullopt);

/// Throws CheckpointError when params do not match the config's schema.
void save_checkpoint(const std::filesystem::path& path, const models::ModelConfig& config,
                     const models::ModelParams& params, const nlohmann::json& metadata = nlohmann::json::object());

/// Throws CheckpointError on a bad container, version mismatch, parameter
/// table that disagrees with the stored config, or unexpected kind.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<models::ModelKind> expected_kind = std::nullopt);

}  // namespace actrec::train
