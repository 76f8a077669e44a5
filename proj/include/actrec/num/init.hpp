#pragma once

#include <cmath>
#include <random>

#include "actrec/num/tensor.hpp"

namespace actrec::num {

using Rng = std::mt19937_64;

/// Fills with U(-bound, bound) drawn in storage order.
template <class S>
void fill_uniform(Tensor<S>& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(dist(rng));
}

/// Fan-in scaled bound 1/sqrt(fan_in).
inline double fan_in_bound(std::size_t fan_in) {
  return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

}  // namespace actrec::num
