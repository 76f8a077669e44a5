#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "actrec/data/feature_sequence.hpp"
#include "actrec/models/config.hpp"
#include "actrec/num/graph.hpp"
#include "actrec/num/tensor.hpp"

namespace actrec::models {

template <class S>
using Params = num::NamedTensors<S>;
using ModelParams = Params<float>;

enum class InitKind { fan_in_uniform, recurrent_uniform, zeros };

struct ParamSpec {
  std::string name;
  num::Shape shape;
  InitKind init = InitKind::zeros;
  std::size_t fan_in = 0;
};

/// Parameter names and shapes, in a fixed order, fully determined by the config.
///
/// TCN family, per stage s:
///   stage{s}/input/{weight,bias}                 [H, Cin, 1], [H]
///   stage{s}/layer{l}/dilated/{weight,bias}      [H, H, k]          (tcn, mstcn)
///   stage{s}/layer{l}/dilated_a/{weight,bias}    [H, H, k] dil 2^l  (mstcn_pp)
///   stage{s}/layer{l}/dilated_b/{weight,bias}    [H, H, k] dil 2^(L-1-l)
///   stage{s}/layer{l}/fuse/{weight,bias}         [H, 2H, 1]         (mstcn_pp)
///   stage{s}/layer{l}/pointwise/{weight,bias}    [H, H, 1]
///   stage{s}/output/{weight,bias}                [C, H, 1]          (multi-stage only)
/// LSTM, per layer i and direction dir in {forward, backward}:
///   lstm/layer{i}/{dir}/{w_ih,w_hh,bias}         [4H, Din], [4H, H], [4H]
/// Head:
///   head/hidden/{weight,bias}, head/output/{weight,bias}
std::vector<ParamSpec> param_schema(const ModelConfig& config);

/// Deterministic initialization from the seed: fan-in scaled uniform for
/// convolution and dense weights, U(-1/sqrt(H), 1/sqrt(H)) for recurrent
/// matrices, zero biases.
ModelParams build_model(const ModelConfig& config, std::uint64_t seed);

std::size_t parameter_count(const ModelConfig& config);

/// Throws CheckpointError when names, order or shapes differ from the schema.
template <class S>
void check_params_match(const ModelConfig& config, const Params<S>& params);

/// Parameter leaves of one graph, looked up by schema name.
class BoundParams {
 public:
  template <class S>
  static BoundParams bind(num::Graph<S>& graph, const Params<S>& params);

  BoundParams() = default;
  BoundParams(std::vector<std::string> names, std::vector<num::Var> vars);

  num::Var operator()(const std::string& name) const;
  const std::vector<num::Var>& vars() const noexcept { return vars_; }

 private:
  std::vector<num::Var> vars_;
  std::unordered_map<std::string, num::Var> by_name_;
};

struct ForwardOutputs {
  num::Var log_probs;                     // [B, C]
  std::vector<num::Var> stage_log_probs;  // [B, C] per stage (multi-stage kinds)
  num::Var frame_features;                // [B, T, F] before temporal pooling
};

/// Builds the classifier over input [B, T, D].
template <class S>
ForwardOutputs forward(num::Graph<S>& graph, const ModelConfig& config, const BoundParams& params, num::Var input);

/// Dilated residual layer: conv(dilation 2^l) -> relu -> 1x1 -> residual add.
template <class S>
num::Var dilated_residual_layer(num::Graph<S>& graph, num::Var x, const BoundParams& params,
                                const std::string& prefix, int dilation, bool causal);

/// Dual-dilation residual layer: two parallel convolutions with dilations 2^l
/// and 2^(L-1-l), concatenated on channels, fused by a 1x1 convolution,
/// relu, a second 1x1 convolution, residual add.
template <class S>
num::Var dual_dilation_layer(num::Graph<S>& graph, num::Var x, const BoundParams& params,
                             const std::string& prefix, int layer_index, int levels, bool causal);

struct Prediction {
  std::vector<float> log_probs;
  int predicted_label = 0;
  std::vector<std::vector<float>> per_stage_log_probs;

  bool operator==(const Prediction&) const = default;
};

/// argmax with ties going to the lowest index.
int argmax(std::span<const float> values);

/// Pure inference over one clip. Throws DataError on a feature-dimension mismatch.
Prediction forward_clip(const ModelConfig& config, const ModelParams& params, const data::FeatureSequence& features);

/// Per-frame representation before pooling ([T, F]) for one clip; the last
/// stage's hidden channels for TCN kinds, the top LSTM layer's outputs otherwise.
template <class S>
num::Tensor<S> frame_features(const ModelConfig& config, const Params<S>& params, const num::Tensor<S>& input);

}  // namespace actrec::models
