#include "actrec/models/config.hpp"

#include <algorithm>
#include <set>

#include "actrec/error.hpp"

namespace actrec::models {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::lstm:
      return "lstm";
    case ModelKind::tcn:
      return "tcn";
    case ModelKind::mstcn:
      return "mstcn";
    case ModelKind::mstcn_pp:
      return "mstcn_pp";
  }
  return "?";
}

std::string to_string(Pooling pooling) {
  return pooling == Pooling::mean ? "mean" : "last";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "lstm") return ModelKind::lstm;
  if (text == "tcn") return ModelKind::tcn;
  if (text == "mstcn" || text == "ms-tcn") return ModelKind::mstcn;
  if (text == "mstcn_pp" || text == "mstcn++" || text == "ms-tcn++") return ModelKind::mstcn_pp;
  throw ConfigError("unknown model kind '" + std::string(text) + "' (expected lstm, tcn, mstcn, mstcn_pp)");
}

Pooling parse_pooling(std::string_view text) {
  if (text == "mean") return Pooling::mean;
  if (text == "last") return Pooling::last;
  throw ConfigError("unknown temporal pooling '" + std::string(text) + "' (expected mean or last)");
}

bool is_tcn_family(ModelKind kind) {
  return kind != ModelKind::lstm;
}

bool is_multi_stage(ModelKind kind) {
  return kind == ModelKind::mstcn || kind == ModelKind::mstcn_pp;
}

ModelConfig ModelConfig::for_kind(ModelKind kind, int input_dim) {
  ModelConfig c;
  c.kind = kind;
  c.input_dim = input_dim;
  c.head_hidden = kind == ModelKind::lstm ? 128 : 256;
  return c;
}

int ModelConfig::stage_count() const {
  if (kind == ModelKind::lstm) return 0;
  return is_multi_stage(kind) ? num_stages : 1;
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model config: ") + name + " must be >= 1, got " + std::to_string(v));
  };
  positive(input_dim, "input_dim");
  positive(num_classes, "num_classes");
  positive(head_hidden, "head_hidden");
  if (kind == ModelKind::lstm) {
    positive(lstm_hidden, "lstm_hidden");
    positive(lstm_layers, "lstm_layers");
    return;
  }
  positive(kernel_size, "kernel_size");
  positive(levels, "levels");
  positive(hidden_channels, "hidden_channels");
  if (is_multi_stage(kind)) positive(num_stages, "num_stages");
  if (levels > 30) throw ConfigError("model config: levels must be <= 30");
  if (!causal && (kernel_size - 1) % 2 != 0) {
    // Dilation 1 appears in every block, so (k-1)*1 must be even.
    throw ConfigError("model config: acausal convolutions need an odd kernel_size");
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return nlohmann::json{{"kind", to_string(c.kind)},
                        {"input_dim", c.input_dim},
                        {"num_classes", c.num_classes},
                        {"kernel_size", c.kernel_size},
                        {"levels", c.levels},
                        {"num_stages", c.num_stages},
                        {"hidden_channels", c.hidden_channels},
                        {"lstm_hidden", c.lstm_hidden},
                        {"lstm_layers", c.lstm_layers},
                        {"head_hidden", c.head_hidden},
                        {"causal", c.causal},
                        {"pooling", to_string(c.pooling)}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const std::set<std::string> known = {"kind",        "input_dim",       "num_classes", "kernel_size",
                                              "levels",      "num_stages",      "hidden_channels",
                                              "lstm_hidden", "lstm_layers",     "head_hidden", "causal",
                                              "pooling"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("model config: unknown key '" + key + "'");
  }
  try {
    const ModelKind kind = parse_model_kind(j.value("kind", std::string("tcn")));
    ModelConfig c = ModelConfig::for_kind(kind, j.value("input_dim", 0));
    c.num_classes = j.value("num_classes", c.num_classes);
    c.kernel_size = j.value("kernel_size", c.kernel_size);
    c.levels = j.value("levels", c.levels);
    c.num_stages = j.value("num_stages", c.num_stages);
    c.hidden_channels = j.value("hidden_channels", c.hidden_channels);
    c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
    c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
    c.head_hidden = j.value("head_hidden", c.head_hidden);
    c.causal = j.value("causal", c.causal);
    c.pooling = parse_pooling(j.value("pooling", std::string("mean")));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

long receptive_field(const ModelConfig& c) {
  if (c.kind == ModelKind::lstm) throw ConfigError("receptive_field is defined for TCN-family models only");
  c.validate();
  long span = 0;
  for (int l = 0; l < c.levels; ++l) {
    long d = 1L << l;
    if (c.kind == ModelKind::mstcn_pp) d = std::max(d, 1L << (c.levels - 1 - l));
    span += static_cast<long>(c.kernel_size - 1) * d;
  }
  if (!c.causal) span /= 2;
  return 1 + static_cast<long>(c.stage_count()) * span;
}

}  // namespace actrec::models
