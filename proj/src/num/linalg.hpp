#pragma once

// Private matrix helpers shared by the op implementations.

#include <Eigen/Core>
#include <cstddef>
#include <string>

#include "actrec/error.hpp"
#include "actrec/num/tensor.hpp"

namespace actrec::num::detail {

template <class S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MatMap = Eigen::Map<RowMat<S>>;
template <class S>
using ConstMatMap = Eigen::Map<const RowMat<S>>;

template <class S>
MatMap<S> as_matrix(S* data, std::size_t rows, std::size_t cols) {
  return MatMap<S>(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <class S>
ConstMatMap<S> as_matrix(const S* data, std::size_t rows, std::size_t cols) {
  return ConstMatMap<S>(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

/// out[r, :] = bias + sum_q a[r, q] * bt[q, :], one row at a time with q in
/// ascending order. Each output row is independent of how many rows there are,
/// which keeps causal prefixes bit-identical when a sequence grows.
template <class S>
void rowwise_affine(const S* a, std::size_t rows, std::size_t k, const S* bt, std::size_t n, const S* bias,
                    S* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    S* __restrict o = out + r * n;
    if (bias) {
      for (std::size_t j = 0; j < n; ++j) o[j] = bias[j];
    } else {
      for (std::size_t j = 0; j < n; ++j) o[j] = S{0};
    }
    const S* ar = a + r * k;
    for (std::size_t q = 0; q < k; ++q) {
      const S av = ar[q];
      if (av == S{0}) continue;
      const S* __restrict b = bt + q * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * b[j];
    }
  }
}

/// Splits [..., C] into (rows, C).
inline std::pair<std::size_t, std::size_t> rows_and_last(const Shape& shape) {
  const std::size_t last = shape.back();
  return {shape_numel(shape) / last, last};
}

/// Interprets [T, C] as B=1 and [B, T, C] as is.
struct SeqDims {
  std::size_t batch, time, channels;
};

inline SeqDims seq_dims(const Shape& shape, const char* op) {
  if (shape.size() == 2) return {1, shape[0], shape[1]};
  if (shape.size() == 3) return {shape[0], shape[1], shape[2]};
  throw ConfigError(std::string(op) + ": expected a [T, C] or [B, T, C] tensor, got " + shape_string(shape));
}

}  // namespace actrec::num::detail
