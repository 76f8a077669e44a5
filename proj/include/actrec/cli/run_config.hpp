#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "actrec/data/synthetic.hpp"
#include "actrec/models/config.hpp"
#include "actrec/stream/engine.hpp"
#include "actrec/train/trainer.hpp"

namespace actrec::cli {

struct ExtractOptions {
  std::size_t grid = 4;
  std::size_t keyframes = 20;
  double crop_margin = 0.10;
  std::size_t crop_size = 64;

  bool operator==(const ExtractOptions&) const = default;
};

struct RunPaths {
  std::string manifest;
  std::string val_manifest;
  std::string checkpoint;
  std::string input;
  std::string frames_dir;

  bool operator==(const RunPaths&) const = default;
};

/// Everything a command needs, resolved from defaults, an optional JSON config
/// file and command-line flags (flags win).
///
/// {
///   "seed": 0, "jobs": 1, "folds": 5,
///   "model":   { ModelConfig keys, input_dim optional },
///   "train":   { TrainConfig keys },
///   "stream":  { window, hop, emit_policy },
///   "synth":   { n_subjects, clips_per_subject, T, D, noise_sigma, subject_effect_sigma, seed },
///   "extract": { grid, keyframes, crop_margin, crop_size },
///   "paths":   { manifest, val_manifest, checkpoint, input, frames_dir }
/// }
struct RunConfig {
  nlohmann::json model = nlohmann::json::object();  // partial; completed by resolve_model
  train::TrainConfig train;
  stream::StreamConfig stream;
  data::SynthSpec synth;
  ExtractOptions extract;
  RunPaths paths;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  int jobs = 1;

  /// Sets every seed (training, synthetic data, fold tie-break).
  void set_seed(std::uint64_t s);
};

/// Throws ConfigError on unknown keys or wrong types, at any level.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Model config from the document's model section with `input_dim` filled in.
/// Throws ConfigError when the section names a different input_dim.
models::ModelConfig resolve_model(const RunConfig& config, int input_dim);

/// Output directories of train, eval and cv runs are immutable once complete:
/// this throws ConfigError if `dir` already holds a finished run.
void begin_run(const std::filesystem::path& dir);
/// Writes the completion marker.
void finish_run(const std::filesystem::path& dir);
inline constexpr const char* kRunCompleteMarker = "RUN_COMPLETE";

/// Writes the resolved configuration as resolved_config.json in `dir`.
void echo_config(const std::filesystem::path& dir, const nlohmann::json& resolved);

}  // namespace actrec::cli
