#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace actrec::models {

enum class ModelKind { lstm, tcn, mstcn, mstcn_pp };
enum class Pooling { mean, last };

std::string to_string(ModelKind kind);
std::string to_string(Pooling pooling);
ModelKind parse_model_kind(std::string_view text);
Pooling parse_pooling(std::string_view text);

bool is_tcn_family(ModelKind kind);
bool is_multi_stage(ModelKind kind);

/// Architecture hyperparameters for one of the four temporal classifiers.
///
/// `for_kind` fills the values from the configuration tables: three
/// bidirectional 512-unit LSTM layers with a Dense(128) head, or dilated TCN
/// blocks with kernel 5 and 5 levels (dilations 1, 2, 4, 8, 16) and a
/// Dense(256) head; the multi-stage variants stack 5 such stages.
struct ModelConfig {
  ModelKind kind = ModelKind::tcn;
  int input_dim = 0;
  int num_classes = 3;
  int kernel_size = 5;
  int levels = 5;
  int num_stages = 5;
  int hidden_channels = 64;
  int lstm_hidden = 512;
  int lstm_layers = 3;
  int head_hidden = 256;
  bool causal = true;
  Pooling pooling = Pooling::mean;

  static ModelConfig for_kind(ModelKind kind, int input_dim);

  /// Stages actually built: 1 for tcn, num_stages for the multi-stage kinds.
  int stage_count() const;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);

/// Missing keys take the kind's defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Frames that can influence the output at the last frame (including itself).
/// Causal: 1 + sum over layers of (k-1)*d, where d is the layer's dilation
/// (the wider branch for dual-dilation layers); acausal counts half of each
/// layer's span. Throws ConfigError for lstm.
long receptive_field(const ModelConfig& config);

}  // namespace actrec::models
