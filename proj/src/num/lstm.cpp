#include <cmath>

#include "actrec/num/ops.hpp"
#include "linalg.hpp"

namespace actrec::num {

using detail::as_matrix;
using detail::RowMat;

namespace {

template <class S>
S logistic(S v) {
  return S{1} / (S{1} + std::exp(-v));
}

}  // namespace

// Fused single-direction LSTM. The forward pass keeps the gate activations,
// cell states and previous hidden states per (batch, time) so the backward
// pass can run without recomputation.
template <class S>
Var lstm(Graph<S>& g, Var input, const LstmDirection& p, bool reverse) {
  const Tensor<S>& x = g.value(input);
  const auto dims = detail::seq_dims(x.shape(), "lstm");
  const Tensor<S>& w_ih = g.value(p.w_ih);
  const Tensor<S>& w_hh = g.value(p.w_hh);
  const Tensor<S>& bias = g.value(p.bias);
  if (w_hh.rank() != 2 || w_hh.dim(0) != 4 * w_hh.dim(1)) {
    throw ConfigError("lstm: w_hh must be [4H, H], got " + shape_string(w_hh.shape()));
  }
  const std::size_t hidden = w_hh.dim(1);
  const std::size_t gates = 4 * hidden;
  const std::size_t din = dims.channels;
  if (w_ih.rank() != 2 || w_ih.dim(0) != gates || w_ih.dim(1) != din) {
    throw ConfigError("lstm: w_ih must be [" + std::to_string(gates) + ", " + std::to_string(din) + "], got " +
                      shape_string(w_ih.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != gates) {
    throw ConfigError("lstm: bias must be [" + std::to_string(gates) + "]");
  }

  const std::size_t B = dims.batch, T = dims.time, H = hidden;
  const std::size_t rows = B * T;

  // Pre-activations from the input for every (b, t) at once.
  RowMat<S> pre = as_matrix(x.ptr(), rows, din) * as_matrix(w_ih.ptr(), gates, din).transpose();
  pre.rowwise() += as_matrix(bias.ptr(), 1, gates).row(0);

  // act holds i, f, g, o after nonlinearity; cell holds c_t; prev_h holds h_{t-1}.
  Tensor<S> act({rows, gates});
  Tensor<S> cell({rows, H});
  Tensor<S> prev_h({rows, H});
  Shape out_shape = x.shape();
  out_shape.back() = H;
  Tensor<S> out(out_shape);

  const auto whh_t = as_matrix(w_hh.ptr(), gates, H).transpose();
  RowMat<S> h = RowMat<S>::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
  RowMat<S> c = RowMat<S>::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
  RowMat<S> z(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(gates));

  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    z.noalias() = h * whh_t;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t r = b * T + t;
      S* a = act.ptr() + r * gates;
      const S* zr = z.data() + b * gates;
      const S* pr = pre.data() + r * gates;
      std::copy(h.data() + b * H, h.data() + (b + 1) * H, prev_h.ptr() + r * H);
      for (std::size_t j = 0; j < H; ++j) {
        const S gi = logistic(pr[j] + zr[j]);
        const S gf = logistic(pr[H + j] + zr[H + j]);
        const S gg = std::tanh(pr[2 * H + j] + zr[2 * H + j]);
        const S go = logistic(pr[3 * H + j] + zr[3 * H + j]);
        a[j] = gi;
        a[H + j] = gf;
        a[2 * H + j] = gg;
        a[3 * H + j] = go;
        const S cn = gf * c(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) + gi * gg;
        const S hn = go * std::tanh(cn);
        c(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = cn;
        h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = hn;
        cell[r * H + j] = cn;
        out[r * H + j] = hn;
      }
    }
  }

  auto backward = [input, p, reverse, B, T, H, din, gates, act = std::move(act), cell = std::move(cell),
                   prev_h = std::move(prev_h)](Graph<S>& gr, Var self) {
    const std::size_t rows = B * T;
    const Tensor<S>& gy = gr.grad(self);
    const auto whh = as_matrix(gr.value(p.w_hh).ptr(), gates, H);

    // Gradient w.r.t. pre-activations for every (b, t).
    RowMat<S> dpre(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(gates));
    RowMat<S> dh_next = RowMat<S>::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
    RowMat<S> dc_next = RowMat<S>::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
    RowMat<S> dz(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(gates));

    for (std::size_t step = T; step-- > 0;) {
      const std::size_t t = reverse ? T - 1 - step : step;
      // Cell state entering this step: the previous step's cell, or zero.
      const bool first = step == 0;
      const std::size_t t_prev = reverse ? t + 1 : t - 1;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t r = b * T + t;
        const S* a = act.ptr() + r * gates;
        S* d = dpre.data() + r * gates;
        for (std::size_t j = 0; j < H; ++j) {
          const S gi = a[j], gf = a[H + j], gg = a[2 * H + j], go = a[3 * H + j];
          const S cn = cell[r * H + j];
          const S tc = std::tanh(cn);
          const S c_prev = first ? S{0} : cell[(b * T + t_prev) * H + j];
          const S dh = gy[r * H + j] + dh_next(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
          const S dc = dh * go * (S{1} - tc * tc) + dc_next(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
          d[j] = dc * gg * gi * (S{1} - gi);
          d[H + j] = dc * c_prev * gf * (S{1} - gf);
          d[2 * H + j] = dc * gi * (S{1} - gg * gg);
          d[3 * H + j] = dh * tc * go * (S{1} - go);
          dc_next(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = dc * gf;
        }
        std::copy(d, d + gates, dz.data() + b * gates);
      }
      dh_next.noalias() = dz * whh;
    }

    if (gr.requires_grad(p.w_hh)) {
      as_matrix(gr.grad_buffer(p.w_hh).ptr(), gates, H).noalias() +=
          dpre.transpose() * as_matrix(prev_h.ptr(), rows, H);
    }
    if (gr.requires_grad(p.w_ih)) {
      as_matrix(gr.grad_buffer(p.w_ih).ptr(), gates, din).noalias() +=
          dpre.transpose() * as_matrix(gr.value(input).ptr(), rows, din);
    }
    if (gr.requires_grad(p.bias)) {
      as_matrix(gr.grad_buffer(p.bias).ptr(), 1, gates) += dpre.colwise().sum();
    }
    if (gr.requires_grad(input)) {
      as_matrix(gr.grad_buffer(input).ptr(), rows, din).noalias() +=
          dpre * as_matrix(gr.value(p.w_ih).ptr(), gates, din);
    }
  };
  return g.record(std::move(out), {input, p.w_ih, p.w_hh, p.bias}, std::move(backward), "lstm");
}

template <class S>
Var lstm_layer(Graph<S>& g, Var input, const LstmDirection& forward, const LstmDirection* backward) {
  Var fwd = lstm(g, input, forward, false);
  if (!backward) return fwd;
  Var bwd = lstm(g, input, *backward, true);
  return concat_last(g, fwd, bwd);
}

template Var lstm<float>(Graph<float>&, Var, const LstmDirection&, bool);
template Var lstm<double>(Graph<double>&, Var, const LstmDirection&, bool);
template Var lstm_layer<float>(Graph<float>&, Var, const LstmDirection&, const LstmDirection*);
template Var lstm_layer<double>(Graph<double>&, Var, const LstmDirection&, const LstmDirection*);

}  // namespace actrec::num
