#include "actrec/models/model.hpp"

#include "actrec/error.hpp"
#include "actrec/num/init.hpp"
#include "actrec/num/ops.hpp"

namespace actrec::models {

using num::Graph;
using num::Shape;
using num::Tensor;
using num::Var;

namespace {

std::string stage_prefix(int s) {
  return "stage" + std::to_string(s) + "/";
}

std::string layer_prefix(int s, int l) {
  return stage_prefix(s) + "layer" + std::to_string(l) + "/";
}

void add_affine(std::vector<ParamSpec>& out, const std::string& prefix, Shape weight_shape, std::size_t fan_in) {
  const std::size_t out_dim = weight_shape[0];
  out.push_back({prefix + "weight", std::move(weight_shape), InitKind::fan_in_uniform, fan_in});
  out.push_back({prefix + "bias", {out_dim}, InitKind::zeros, 0});
}

}  // namespace

std::vector<ParamSpec> param_schema(const ModelConfig& c) {
  c.validate();
  std::vector<ParamSpec> specs;
  const auto C = static_cast<std::size_t>(c.num_classes);
  std::size_t feature_width = 0;

  if (c.kind == ModelKind::lstm) {
    const auto H = static_cast<std::size_t>(c.lstm_hidden);
    std::size_t din = static_cast<std::size_t>(c.input_dim);
    for (int i = 0; i < c.lstm_layers; ++i) {
      for (const char* dir : {"forward", "backward"}) {
        const std::string p = "lstm/layer" + std::to_string(i) + "/" + dir + "/";
        specs.push_back({p + "w_ih", {4 * H, din}, InitKind::recurrent_uniform, H});
        specs.push_back({p + "w_hh", {4 * H, H}, InitKind::recurrent_uniform, H});
        specs.push_back({p + "bias", {4 * H}, InitKind::zeros, 0});
      }
      din = 2 * H;
    }
    feature_width = 2 * H;
  } else {
    const auto H = static_cast<std::size_t>(c.hidden_channels);
    const auto k = static_cast<std::size_t>(c.kernel_size);
    for (int s = 0; s < c.stage_count(); ++s) {
      const std::size_t cin = s == 0 ? static_cast<std::size_t>(c.input_dim) : C;
      add_affine(specs, stage_prefix(s) + "input/", {H, cin, 1}, cin);
      for (int l = 0; l < c.levels; ++l) {
        const std::string p = layer_prefix(s, l);
        if (c.kind == ModelKind::mstcn_pp) {
          add_affine(specs, p + "dilated_a/", {H, H, k}, H * k);
          add_affine(specs, p + "dilated_b/", {H, H, k}, H * k);
          add_affine(specs, p + "fuse/", {H, 2 * H, 1}, 2 * H);
        } else {
          add_affine(specs, p + "dilated/", {H, H, k}, H * k);
        }
        add_affine(specs, p + "pointwise/", {H, H, 1}, H);
      }
      if (is_multi_stage(c.kind)) add_affine(specs, stage_prefix(s) + "output/", {C, H, 1}, H);
    }
    feature_width = H;
  }
  const auto hidden = static_cast<std::size_t>(c.head_hidden);
  add_affine(specs, "head/hidden/", {hidden, feature_width}, feature_width);
  add_affine(specs, "head/output/", {C, hidden}, hidden);
  return specs;
}

ModelParams build_model(const ModelConfig& config, std::uint64_t seed) {
  num::Rng rng(seed);
  ModelParams params;
  for (const ParamSpec& spec : param_schema(config)) {
    Tensor<float> t(spec.shape);
    switch (spec.init) {
      case InitKind::fan_in_uniform:
      case InitKind::recurrent_uniform:
        num::fill_uniform(t, num::fan_in_bound(spec.fan_in), rng);
        break;
      case InitKind::zeros:
        break;
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

std::size_t parameter_count(const ModelConfig& config) {
  std::size_t n = 0;
  for (const ParamSpec& spec : param_schema(config)) n += num::shape_numel(spec.shape);
  return n;
}

template <class S>
void check_params_match(const ModelConfig& config, const Params<S>& params) {
  const auto specs = param_schema(config);
  for (const ParamSpec& spec : specs) {
    if (!params.contains(spec.name)) throw CheckpointError("missing parameter '" + spec.name + "'");
    const auto& shape = params.at(spec.name).shape();
    if (shape != spec.shape) {
      throw CheckpointError("parameter '" + spec.name + "' has shape " + num::shape_string(shape) + ", expected " +
                            num::shape_string(spec.shape));
    }
  }
  if (params.size() != specs.size()) {
    for (const auto& name : params.names()) {
      bool known = false;
      for (const ParamSpec& spec : specs) known = known || spec.name == name;
      if (!known) throw CheckpointError("unexpected parameter '" + name + "' for a " + to_string(config.kind) + " model");
    }
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (params.name(i) != specs[i].name) {
      throw CheckpointError("parameter order differs from the schema at '" + params.name(i) + "'");
    }
  }
}

BoundParams::BoundParams(std::vector<std::string> names, std::vector<Var> vars) : vars_(std::move(vars)) {
  for (std::size_t i = 0; i < names.size(); ++i) by_name_.emplace(std::move(names[i]), vars_[i]);
}

template <class S>
BoundParams BoundParams::bind(Graph<S>& graph, const Params<S>& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(graph.parameter(params.at(i), params.name(i)));
  return BoundParams(params.names(), std::move(vars));
}

Var BoundParams::operator()(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("model has no parameter '" + name + "'");
  return it->second;
}

namespace {

template <class S>
Var conv(Graph<S>& g, Var x, const BoundParams& p, const std::string& prefix, int dilation, bool causal) {
  return num::conv1d_dilated(g, x, p(prefix + "weight"), p(prefix + "bias"), dilation, causal);
}

template <class S>
Var pool(Graph<S>& g, Var x, Pooling pooling) {
  return pooling == Pooling::mean ? num::mean_over_time(g, x) : num::last_step(g, x);
}

}  // namespace

template <class S>
Var dilated_residual_layer(Graph<S>& g, Var x, const BoundParams& p, const std::string& prefix, int dilation,
                           bool causal) {
  Var h = num::relu(g, conv(g, x, p, prefix + "dilated/", dilation, causal));
  h = conv(g, h, p, prefix + "pointwise/", 1, causal);
  return num::add(g, x, h);
}

template <class S>
Var dual_dilation_layer(Graph<S>& g, Var x, const BoundParams& p, const std::string& prefix, int layer_index,
                        int levels, bool causal) {
  if (layer_index < 0 || layer_index >= levels) {
    throw ConfigError("dual_dilation_layer: layer index " + std::to_string(layer_index) + " outside [0, " +
                      std::to_string(levels) + ")");
  }
  const int small = 1 << layer_index;
  const int large = 1 << (levels - 1 - layer_index);
  Var a = conv(g, x, p, prefix + "dilated_a/", small, causal);
  Var b = conv(g, x, p, prefix + "dilated_b/", large, causal);
  Var h = num::relu(g, conv(g, num::concat_last(g, a, b), p, prefix + "fuse/", 1, causal));
  h = conv(g, h, p, prefix + "pointwise/", 1, causal);
  return num::add(g, x, h);
}

template <class S>
ForwardOutputs forward(Graph<S>& g, const ModelConfig& c, const BoundParams& p, Var input) {
  const Shape& shape = g.value(input).shape();
  if (shape.size() != 3) throw ConfigError("model input must be [B, T, D], got " + num::shape_string(shape));
  if (shape[2] != static_cast<std::size_t>(c.input_dim)) {
    throw DataError("feature dimension " + std::to_string(shape[2]) + " does not match model input_dim " +
                    std::to_string(c.input_dim));
  }

  ForwardOutputs out;
  if (c.kind == ModelKind::lstm) {
    Var h = input;
    for (int i = 0; i < c.lstm_layers; ++i) {
      const std::string base = "lstm/layer" + std::to_string(i) + "/";
      const num::LstmDirection fwd{p(base + "forward/w_ih"), p(base + "forward/w_hh"), p(base + "forward/bias")};
      const num::LstmDirection bwd{p(base + "backward/w_ih"), p(base + "backward/w_hh"), p(base + "backward/bias")};
      h = num::lstm_layer(g, h, fwd, &bwd);
    }
    out.frame_features = h;
  } else {
    Var stage_input = input;
    Var h;
    const int stages = c.stage_count();
    for (int s = 0; s < stages; ++s) {
      h = conv(g, stage_input, p, stage_prefix(s) + "input/", 1, c.causal);
      for (int l = 0; l < c.levels; ++l) {
        if (c.kind == ModelKind::mstcn_pp) {
          h = dual_dilation_layer(g, h, p, layer_prefix(s, l), l, c.levels, c.causal);
        } else {
          h = dilated_residual_layer(g, h, p, layer_prefix(s, l), 1 << l, c.causal);
        }
      }
      if (is_multi_stage(c.kind)) {
        Var logits = conv(g, h, p, stage_prefix(s) + "output/", 1, c.causal);
        out.stage_log_probs.push_back(num::log_softmax(g, pool(g, logits, c.pooling)));
        if (s + 1 < stages) stage_input = num::softmax(g, logits);
      }
    }
    out.frame_features = h;
  }

  Var pooled = pool(g, out.frame_features, c.pooling);
  Var hidden = num::relu(g, num::dense(g, pooled, p("head/hidden/weight"), p("head/hidden/bias")));
  Var logits = num::dense(g, hidden, p("head/output/weight"), p("head/output/bias"));
  out.log_probs = num::log_softmax(g, logits);
  return out;
}

int argmax(std::span<const float> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

Prediction forward_clip(const ModelConfig& config, const ModelParams& params, const data::FeatureSequence& features) {
  if (features.dim != static_cast<std::size_t>(config.input_dim)) {
    throw DataError("feature dimension " + std::to_string(features.dim) + " does not match model input_dim " +
                    std::to_string(config.input_dim));
  }
  if (features.frames == 0) throw DataError("cannot classify an empty feature sequence");
  Graph<float> g(false);
  const BoundParams bound = BoundParams::bind(g, params);
  Var input = g.constant(Tensor<float>({1, features.frames, features.dim}, features.values));
  const ForwardOutputs out = forward(g, config, bound, input);

  Prediction pred;
  const auto lp = g.value(out.log_probs).values();
  pred.log_probs.assign(lp.begin(), lp.end());
  pred.predicted_label = argmax(pred.log_probs);
  for (Var v : out.stage_log_probs) {
    const auto s = g.value(v).values();
    pred.per_stage_log_probs.emplace_back(s.begin(), s.end());
  }
  return pred;
}

template <class S>
Tensor<S> frame_features(const ModelConfig& config, const Params<S>& params, const Tensor<S>& input) {
  if (input.rank() != 2) throw ConfigError("frame_features expects a [T, D] tensor");
  Graph<S> g(false);
  const BoundParams bound = BoundParams::bind(g, params);
  Var x = g.constant(input.reshaped({1, input.dim(0), input.dim(1)}));
  const ForwardOutputs out = forward(g, config, bound, x);
  const Tensor<S>& f = g.value(out.frame_features);
  return f.reshaped({f.dim(1), f.dim(2)});
}

#define ACTREC_INSTANTIATE_MODEL(S)                                                                           \
  template void check_params_match<S>(const ModelConfig&, const Params<S>&);                                 \
  template BoundParams BoundParams::bind<S>(Graph<S>&, const Params<S>&);                                    \
  template ForwardOutputs forward<S>(Graph<S>&, const ModelConfig&, const BoundParams&, Var);                \
  template Var dilated_residual_layer<S>(Graph<S>&, Var, const BoundParams&, const std::string&, int, bool); \
  template Var dual_dilation_layer<S>(Graph<S>&, Var, const BoundParams&, const std::string&, int, int, bool); \
  template Tensor<S> frame_features<S>(const ModelConfig&, const Params<S>&, const Tensor<S>&);

ACTREC_INSTANTIATE_MODEL(float)
ACTREC_INSTANTIATE_MODEL(double)

}  // namespace actrec::models
