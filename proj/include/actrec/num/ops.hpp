#pragma once

#include <span>

#include "actrec/num/graph.hpp"

// Differentiable operations over Graph variables.
//
// Sequence tensors are [T, C] or [B, T, C] (batch, time, channels), row-major.
// All ops throw ConfigError on shape mismatch.

namespace actrec::num {

/// Dilated 1-D convolution along time. weight is [Cout, Cin, k], bias [Cout].
/// The output has the input's length. Causal mode left-pads by (k-1)*dilation
/// zeros; acausal mode pads (k-1)*dilation/2 on each side and rejects odd
/// totals. Output row t depends on the input through a fixed accumulation
/// order that does not depend on the sequence length.
template <class S>
Var conv1d_dilated(Graph<S>& g, Var input, Var weight, Var bias, int dilation, bool causal);

/// Affine map over the last axis: [..., Din] x [Dout, Din]^T + [Dout].
template <class S>
Var dense(Graph<S>& g, Var input, Var weight, Var bias);

template <class S>
Var relu(Graph<S>& g, Var x);
template <class S>
Var sigmoid(Graph<S>& g, Var x);
template <class S>
Var tanh(Graph<S>& g, Var x);

/// Softmax over the last axis.
template <class S>
Var softmax(Graph<S>& g, Var x);

/// log(softmax(x)) over the last axis, with max subtraction.
template <class S>
Var log_softmax(Graph<S>& g, Var x);

/// Mean over rows of -log_probs[n, labels[n]]. log_probs is [N, C].
/// Throws DataError on a label outside [0, C).
template <class S>
Var cross_entropy(Graph<S>& g, Var log_probs, std::span<const int> labels);

template <class S>
Var add(Graph<S>& g, Var a, Var b);

template <class S>
Var scale(Graph<S>& g, Var x, S factor);

/// Concatenates along the last axis; leading axes must agree.
template <class S>
Var concat_last(Graph<S>& g, Var a, Var b);

/// Concatenates along the first axis; trailing axes must agree.
template <class S>
Var concat_rows(Graph<S>& g, const std::vector<Var>& parts);

/// [B, T, C] -> [B, C] mean over time ([T, C] -> [1, C]).
template <class S>
Var mean_over_time(Graph<S>& g, Var x);

/// [B, T, C] -> [B, C] last time step ([T, C] -> [1, C]).
template <class S>
Var last_step(Graph<S>& g, Var x);

/// Parameters for one direction of an LSTM layer. Gate order is
/// input, forget, cell candidate, output.
struct LstmDirection {
  Var w_ih;  // [4H, Din]
  Var w_hh;  // [4H, H]
  Var bias;  // [4H]
};

/// Single-direction LSTM over [B, T, Din] -> [B, T, H]. `reverse` runs the
/// recurrence from the last frame to the first.
template <class S>
Var lstm(Graph<S>& g, Var input, const LstmDirection& params, bool reverse);

/// LSTM layer. With a backward direction the output is the per-timestep
/// concatenation [forward, backward] of width 2H.
template <class S>
Var lstm_layer(Graph<S>& g, Var input, const LstmDirection& forward, const LstmDirection* backward);

}  // namespace actrec::num
