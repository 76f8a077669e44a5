#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace actrec::data {

/// T x D matrix of per-frame features, frame-major.
struct FeatureSequence {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  FeatureSequence() = default;
  FeatureSequence(std::size_t t, std::size_t d) : frames(t), dim(d), values(t * d, 0.0f) {}
  FeatureSequence(std::size_t t, std::size_t d, std::vector<float> v) : frames(t), dim(d), values(std::move(v)) {}

  float& at(std::size_t t, std::size_t d) { return values[t * dim + d]; }
  float at(std::size_t t, std::size_t d) const { return values[t * dim + d]; }
  std::span<const float> row(std::size_t t) const { return {values.data() + t * dim, dim}; }
  std::span<float> row(std::size_t t) { return {values.data() + t * dim, dim}; }

  /// Frames [begin, begin + count) as a new sequence.
  FeatureSequence slice(std::size_t begin, std::size_t count) const {
    return FeatureSequence(count, dim,
                           std::vector<float>(values.begin() + static_cast<std::ptrdiff_t>(begin * dim),
                                              values.begin() + static_cast<std::ptrdiff_t>((begin + count) * dim)));
  }

  bool operator==(const FeatureSequence&) const = default;
};

}  // namespace actrec::data
