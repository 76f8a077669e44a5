#pragma once

// Model-level reference checks shared by the unit tests and the acceptance run.

#include <random>
#include <vector>

#include "actrec/models/model.hpp"
#include "actrec/num/grad_check.hpp"
#include "actrec/num/ops.hpp"
#include "actrec/train/trainer.hpp"

namespace oracle {

using actrec::models::ModelConfig;
using actrec::models::ModelKind;

/// Same structure as the default config (layers, stages, levels, kernel),
/// narrow enough for an element-wise finite-difference check.
inline ModelConfig narrow_config(ModelKind kind, int input_dim) {
  ModelConfig c = ModelConfig::for_kind(kind, input_dim);
  c.hidden_channels = 6;
  c.lstm_hidden = 5;
  c.head_hidden = 7;
  return c;
}

/// Positive weights, so an impulse can never cancel out on its way through.
/// Each output channel's weights sum to about 0.75, so activations stay bounded
/// and the softmax between stages never underflows. Convolution taps are
/// skewed toward tap 0 (the farthest frame) so the longest dependency chain
/// keeps an O(1) magnitude instead of shrinking by 1/k per layer.
inline actrec::models::Params<double> positive_params(const ModelConfig& c, std::uint64_t seed) {
  auto params = actrec::models::build_model(c, seed).cast<double>();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = params.at(i);
    if (t.rank() == 1) {
      for (double& v : t.values()) v = 0.1 * u(rng);
      continue;
    }
    const std::size_t in = t.dim(1);
    const std::size_t k = t.rank() == 3 ? t.dim(2) : 1;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double tap = (j % k == 0) ? 1.0 : 0.02;
      t[j] = tap * u(rng) / static_cast<double>(in);
    }
  }
  return params;
}

/// Whether an impulse at frame t0 changes the last frame's features. Frames
/// outside the receptive field have no path to the output at all, so a large
/// impulse cannot create a false positive; it only keeps long, attenuated
/// dependency chains above rounding noise.
inline bool impulse_reaches_end(const ModelConfig& c, const actrec::models::Params<double>& params, std::size_t T,
                                std::size_t t0, const actrec::num::Tensor<double>& baseline) {
  const auto D = static_cast<std::size_t>(c.input_dim);
  actrec::num::Tensor<double> x({T, D}, 0.0);
  for (std::size_t d = 0; d < D; ++d) x[t0 * D + d] = 1e12;
  const auto f = actrec::models::frame_features(c, params, x);
  const std::size_t F = f.dim(1);
  for (std::size_t j = 0; j < F; ++j) {
    if (f[(T - 1) * F + j] != baseline[(T - 1) * F + j]) return true;
  }
  return false;
}

/// Receptive field measured by impulse propagation: T minus the earliest frame
/// whose impulse changes the final frame's features. Every frame is probed.
inline long impulse_receptive_field(const ModelConfig& c, std::size_t T, std::uint64_t seed = 5) {
  const auto params = positive_params(c, seed);
  const auto baseline = actrec::models::frame_features(
      c, params, actrec::num::Tensor<double>({T, static_cast<std::size_t>(c.input_dim)}, 0.0));
  long earliest = -1;
  for (std::size_t t0 = 0; t0 < T; ++t0) {
    if (impulse_reaches_end(c, params, T, t0, baseline)) {
      earliest = static_cast<long>(t0);
      break;
    }
  }
  return earliest < 0 ? 0 : static_cast<long>(T) - earliest;
}

/// Receptive field from exact input sensitivity: the gradient of the last
/// frame's summed features with respect to every input frame. Frames without a
/// path to the last frame get a gradient of exactly zero, while frames with a
/// path get a positive-weight product that stays far above the double range
/// limit. Unlike a forward impulse, this does not rely on the perturbation
/// surviving softmax saturation between stages.
inline long sensitivity_receptive_field(const ModelConfig& c, std::size_t T, std::uint64_t seed = 5) {
  using namespace actrec;
  const auto params = positive_params(c, seed);
  const auto D = static_cast<std::size_t>(c.input_dim);
  const num::Tensor<double> input({1, T, D}, 0.0);
  num::Graph<double> g;
  const models::BoundParams bound = models::BoundParams::bind(g, params);
  const num::Var x = g.parameter(input, "input");
  const models::ForwardOutputs out = models::forward(g, c, bound, x);
  const std::size_t F = g.value(out.frame_features).dim(2);
  const num::Var last = num::last_step(g, out.frame_features);
  const num::Var ones = g.constant(num::Tensor<double>({1, F}, 1.0));
  const num::Var zero = g.constant(num::Tensor<double>({1}, 0.0));
  const num::Var total = num::dense(g, last, ones, zero);
  g.backward(total);
  const num::Tensor<double> grad = g.grad(x);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t d = 0; d < D; ++d) {
      if (grad[t * D + d] != 0.0) return static_cast<long>(T - t);
    }
  }
  return 0;
}

/// Finite-difference check of the full training loss (final head plus stage
/// terms) with respect to every parameter of a model.
inline actrec::num::GradCheckResult grad_check_model(const ModelConfig& c, std::size_t T, std::uint64_t seed,
                                                     double eps = 1e-3, int refinements = 3) {
  using namespace actrec;
  auto params = models::build_model(c, seed).cast<double>();
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<train::LabeledClip> clips;
  for (int i = 0; i < 2; ++i) {
    data::FeatureSequence f(T, static_cast<std::size_t>(c.input_dim));
    for (float& v : f.values) v = n(rng);
    clips.push_back({"c" + std::to_string(i), i % c.num_classes, std::move(f)});
  }
  // Biases start at zero; randomize them so relu units sit away from their kink at 0.
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.name(i).ends_with("bias")) {
      for (double& v : params.at(i).values()) v = u(rng);
    }
  }
  const std::vector<std::size_t> batch{0, 1};
  auto build = [&](num::Graph<double>& g, std::span<const num::Var> vars) {
    const models::BoundParams bound(params.names(), std::vector<num::Var>(vars.begin(), vars.end()));
    return train::batch_loss(g, c, bound, std::span<const train::LabeledClip>(clips), batch, true);
  };
  return num::grad_check(build, params, eps, refinements);
}

}  // namespace oracle
