#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "actrec/data/manifest.hpp"
#include "actrec/models/model.hpp"

namespace actrec::train {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool stage_supervision = true;  // only affects the multi-stage kinds
  bool shuffle = true;

  /// Throws ConfigError for non-positive epochs or batch size, or a negative
  /// or non-finite learning rate.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep defaults; unknown keys throw ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LabeledClip {
  std::string clip_id;
  int label = 0;
  data::FeatureSequence features;
};

/// Reads every feature file of the manifest. Throws DataError when a file's
/// frame count disagrees with its record or feature dimensions differ.
std::vector<LabeledClip> load_clips(const data::Manifest& manifest);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> val_weighted_f1;
  double wall_time_s = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

nlohmann::json to_json(const TrainHistory& history);

struct ValidationPrediction {
  std::string clip_id;
  int label = 0;
  models::Prediction prediction;
};

struct TrainResult {
  models::ModelParams params;
  TrainHistory history;
  /// Predictions of the final parameters on the validation clips, if any.
  std::vector<ValidationPrediction> validation;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam on cross-entropy of the final head, plus the mean stage
/// cross-entropy for multi-stage kinds when stage supervision is on.
/// Minibatches follow a shuffle keyed by (seed, epoch); the last partial batch
/// is kept. Clips of different lengths in one minibatch are run as separate
/// equal-length groups whose losses are combined as a mean over clips.
/// Throws ConfigError on an empty training set and TrainingError (with epoch
/// and batch) on non-finite losses or gradients.
TrainResult train(const models::ModelConfig& config, const TrainConfig& tconfig, std::span<const LabeledClip> train_set,
                  std::span<const LabeledClip> validation = {}, const EpochCallback& on_epoch = {});

/// Batch order of one epoch: a permutation of [0, n) when shuffling,
/// the identity otherwise.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch, bool shuffle);

template <class S>
struct BatchGradients {
  double loss = 0.0;
  std::vector<num::Tensor<S>> grads;  // parameter order; empty when unreached
};

/// Loss and parameter gradients of one minibatch, without updating anything.
template <class S>
BatchGradients<S> batch_gradients(const models::ModelConfig& config, const models::Params<S>& params,
                                  std::span<const LabeledClip> clips, std::span<const std::size_t> batch,
                                  bool stage_supervision);

/// Builds the minibatch loss inside an existing graph.
template <class S>
num::Var batch_loss(num::Graph<S>& graph, const models::ModelConfig& config, const models::BoundParams& params,
                    std::span<const LabeledClip> clips, std::span<const std::size_t> batch, bool stage_supervision);

}  // namespace actrec::train
