#pragma once

#include <cstdint>
#include <vector>

#include "actrec/num/tensor.hpp"

namespace actrec::num {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators, one per parameter tensor in the same
/// order and shape as the parameter collection they were created for.
template <class S>
struct AdamState {
  AdamOptions options;
  std::vector<Tensor<S>> first_moment;
  std::vector<Tensor<S>> second_moment;
  std::int64_t step = 0;

  AdamState() = default;
  AdamState(const NamedTensors<S>& params, AdamOptions opts);
};

/// One bias-corrected Adam update. `grads[i]` belongs to `params.at(i)`; an
/// empty gradient tensor is treated as zero. Throws TrainingError naming the
/// parameter when a gradient is non-finite or a shape disagrees.
template <class S>
void adam_step(NamedTensors<S>& params, const std::vector<Tensor<S>>& grads, AdamState<S>& state);

extern template struct AdamState<float>;
extern template struct AdamState<double>;

}  // namespace actrec::num
