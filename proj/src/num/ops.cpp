#include "actrec/num/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "actrec/error.hpp"
#include "linalg.hpp"

namespace actrec::num {

using detail::as_matrix;
using detail::rows_and_last;
using detail::seq_dims;

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

// Offset (in frames, backwards) of tap j: input frame = t - offset.
long tap_offset(std::size_t j, std::size_t k, int dilation, bool causal) {
  const long d = dilation;
  if (causal) return static_cast<long>(k - 1 - j) * d;
  const long pad = static_cast<long>(k - 1) * d / 2;
  return pad - static_cast<long>(j) * d;
}

}  // namespace

template <class S>
Var conv1d_dilated(Graph<S>& g, Var input, Var weight, Var bias, int dilation, bool causal) {
  const Tensor<S>& x = g.value(input);
  const Tensor<S>& w = g.value(weight);
  const Tensor<S>& b = g.value(bias);
  const auto dims = seq_dims(x.shape(), "conv1d_dilated");
  require(w.rank() == 3, "conv1d_dilated: weight must be [Cout, Cin, k], got " + shape_string(w.shape()));
  const std::size_t cout = w.dim(0), cin = w.dim(1), k = w.dim(2);
  require(cin == dims.channels, "conv1d_dilated: input has " + std::to_string(dims.channels) +
                                    " channels, weight expects " + std::to_string(cin));
  require(b.rank() == 1 && b.dim(0) == cout, "conv1d_dilated: bias must be [" + std::to_string(cout) + "]");
  require(dilation >= 1, "conv1d_dilated: dilation must be >= 1");
  if (!causal) {
    require(((k - 1) * static_cast<std::size_t>(dilation)) % 2 == 0,
            "conv1d_dilated: acausal padding (k-1)*dilation must be even");
  }

  const std::size_t rows = dims.batch * dims.time;
  const std::size_t width = k * cin;

  // Weight as [k*Cin, Cout], row index j*Cin + c.
  Tensor<S> wt({width, cout});
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t c = 0; c < cin; ++c)
      for (std::size_t j = 0; j < k; ++j) wt[(j * cin + c) * cout + co] = w[(co * cin + c) * k + j];

  // Column matrix [B*T, k*Cin]; skipped when k == 1.
  Tensor<S> cols;
  if (k > 1) {
    cols = Tensor<S>({rows, width});
    for (std::size_t bi = 0; bi < dims.batch; ++bi) {
      for (std::size_t t = 0; t < dims.time; ++t) {
        S* dst = cols.ptr() + (bi * dims.time + t) * width;
        for (std::size_t j = 0; j < k; ++j) {
          const long src = static_cast<long>(t) - tap_offset(j, k, dilation, causal);
          if (src < 0 || src >= static_cast<long>(dims.time)) continue;
          const S* from = x.ptr() + (bi * dims.time + static_cast<std::size_t>(src)) * cin;
          std::copy(from, from + cin, dst + j * cin);
        }
      }
    }
  }
  const S* a = k > 1 ? cols.ptr() : x.ptr();

  Shape out_shape = x.shape();
  out_shape.back() = cout;
  Tensor<S> out(out_shape);
  detail::rowwise_affine(a, rows, width, wt.ptr(), cout, b.ptr(), out.ptr());

  auto backward = [input, weight, bias, dims, cout, cin, k, width, rows, dilation, causal, wt = std::move(wt),
                   cols = std::move(cols)](Graph<S>& gr, Var self) {
    const Tensor<S>& gy = gr.grad(self);
    const auto dy = as_matrix(gy.ptr(), rows, cout);
    const S* a_ptr = k > 1 ? cols.ptr() : gr.value(input).ptr();
    const auto a_mat = as_matrix(a_ptr, rows, width);
    if (gr.requires_grad(weight)) {
      detail::RowMat<S> dwt = a_mat.transpose() * dy;
      Tensor<S>& gw = gr.grad_buffer(weight);
      for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t j = 0; j < k; ++j)
            gw[(co * cin + c) * k + j] += dwt(static_cast<Eigen::Index>(j * cin + c), static_cast<Eigen::Index>(co));
    }
    if (gr.requires_grad(bias)) {
      Tensor<S>& gb = gr.grad_buffer(bias);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t co = 0; co < cout; ++co) gb[co] += gy[r * cout + co];
    }
    if (gr.requires_grad(input)) {
      detail::RowMat<S> dcols = dy * as_matrix(wt.ptr(), width, cout).transpose();
      Tensor<S>& gx = gr.grad_buffer(input);
      for (std::size_t bi = 0; bi < dims.batch; ++bi) {
        for (std::size_t t = 0; t < dims.time; ++t) {
          const S* src_row = dcols.data() + (bi * dims.time + t) * width;
          for (std::size_t j = 0; j < k; ++j) {
            const long src = static_cast<long>(t) - tap_offset(j, k, dilation, causal);
            if (src < 0 || src >= static_cast<long>(dims.time)) continue;
            S* to = gx.ptr() + (bi * dims.time + static_cast<std::size_t>(src)) * cin;
            const S* from = src_row + j * cin;
            for (std::size_t c = 0; c < cin; ++c) to[c] += from[c];
          }
        }
      }
    }
  };
  return g.record(std::move(out), {input, weight, bias}, std::move(backward), "conv1d_dilated");
}

template <class S>
Var dense(Graph<S>& g, Var input, Var weight, Var bias) {
  const Tensor<S>& x = g.value(input);
  const Tensor<S>& w = g.value(weight);
  const Tensor<S>& b = g.value(bias);
  require(w.rank() == 2, "dense: weight must be [Dout, Din], got " + shape_string(w.shape()));
  const std::size_t dout = w.dim(0), din = w.dim(1);
  require(x.shape().back() == din, "dense: input last axis " + std::to_string(x.shape().back()) +
                                       " does not match weight Din " + std::to_string(din));
  require(b.rank() == 1 && b.dim(0) == dout, "dense: bias must be [" + std::to_string(dout) + "]");
  const std::size_t rows = x.size() / din;

  Tensor<S> wt({din, dout});
  for (std::size_t o = 0; o < dout; ++o)
    for (std::size_t i = 0; i < din; ++i) wt[i * dout + o] = w[o * din + i];

  Shape out_shape = x.shape();
  out_shape.back() = dout;
  Tensor<S> out(out_shape);
  detail::rowwise_affine(x.ptr(), rows, din, wt.ptr(), dout, b.ptr(), out.ptr());

  auto backward = [input, weight, bias, rows, din, dout](Graph<S>& gr, Var self) {
    const auto dy = as_matrix(gr.grad(self).ptr(), rows, dout);
    if (gr.requires_grad(weight)) {
      as_matrix(gr.grad_buffer(weight).ptr(), dout, din).noalias() +=
          dy.transpose() * as_matrix(gr.value(input).ptr(), rows, din);
    }
    if (gr.requires_grad(bias)) {
      auto gb = as_matrix(gr.grad_buffer(bias).ptr(), 1, dout);
      gb += dy.colwise().sum();
    }
    if (gr.requires_grad(input)) {
      as_matrix(gr.grad_buffer(input).ptr(), rows, din).noalias() +=
          dy * as_matrix(gr.value(weight).ptr(), dout, din);
    }
  };
  return g.record(std::move(out), {input, weight, bias}, std::move(backward), "dense");
}

template <class S>
Var relu(Graph<S>& g, Var x) {
  const Tensor<S>& in = g.value(x);
  Tensor<S> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > S{0} ? in[i] : S{0};
  auto backward = [x](Graph<S>& gr, Var self) {
    const Tensor<S>& y = gr.value(self);
    const Tensor<S>& gy = gr.grad(self);
    Tensor<S>& gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] > S{0}) gx[i] += gy[i];
  };
  return g.record(std::move(out), {x}, std::move(backward), "relu");
}

template <class S>
Var sigmoid(Graph<S>& g, Var x) {
  const Tensor<S>& in = g.value(x);
  Tensor<S> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = S{1} / (S{1} + std::exp(-in[i]));
  auto backward = [x](Graph<S>& gr, Var self) {
    const Tensor<S>& y = gr.value(self);
    const Tensor<S>& gy = gr.grad(self);
    Tensor<S>& gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += gy[i] * y[i] * (S{1} - y[i]);
  };
  return g.record(std::move(out), {x}, std::move(backward), "sigmoid");
}

template <class S>
Var tanh(Graph<S>& g, Var x) {
  const Tensor<S>& in = g.value(x);
  Tensor<S> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
  auto backward = [x](Graph<S>& gr, Var self) {
    const Tensor<S>& y = gr.value(self);
    const Tensor<S>& gy = gr.grad(self);
    Tensor<S>& gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += gy[i] * (S{1} - y[i] * y[i]);
  };
  return g.record(std::move(out), {x}, std::move(backward), "tanh");
}

template <class S>
Var softmax(Graph<S>& g, Var x) {
  const Tensor<S>& in = g.value(x);
  const auto [rows, n] = rows_and_last(in.shape());
  Tensor<S> out(in.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* xi = in.ptr() + r * n;
    S* yo = out.ptr() + r * n;
    const S m = *std::max_element(xi, xi + n);
    S sum{0};
    for (std::size_t j = 0; j < n; ++j) {
      yo[j] = std::exp(xi[j] - m);
      sum += yo[j];
    }
    for (std::size_t j = 0; j < n; ++j) yo[j] /= sum;
  }
  auto backward = [x, rows = rows, n = n](Graph<S>& gr, Var self) {
    const Tensor<S>& y = gr.value(self);
    const Tensor<S>& gy = gr.grad(self);
    Tensor<S>& gx = gr.grad_buffer(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * n;
      S dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += gy[o + j] * y[o + j];
      for (std::size_t j = 0; j < n; ++j) gx[o + j] += y[o + j] * (gy[o + j] - dot);
    }
  };
  return g.record(std::move(out), {x}, std::move(backward), "softmax");
}

template <class S>
Var log_softmax(Graph<S>& g, Var x) {
  const Tensor<S>& in = g.value(x);
  const auto [rows, n] = rows_and_last(in.shape());
  Tensor<S> out(in.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* xi = in.ptr() + r * n;
    S* yo = out.ptr() + r * n;
    const S m = *std::max_element(xi, xi + n);
    S sum{0};
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(xi[j] - m);
    const S lse = m + std::log(sum);
    for (std::size_t j = 0; j < n; ++j) yo[j] = xi[j] - lse;
  }
  auto backward = [x, rows = rows, n = n](Graph<S>& gr, Var self) {
    const Tensor<S>& y = gr.value(self);
    const Tensor<S>& gy = gr.grad(self);
    Tensor<S>& gx = gr.grad_buffer(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * n;
      S total{0};
      for (std::size_t j = 0; j < n; ++j) total += gy[o + j];
      for (std::size_t j = 0; j < n; ++j) gx[o + j] += gy[o + j] - std::exp(y[o + j]) * total;
    }
  };
  return g.record(std::move(out), {x}, std::move(backward), "log_softmax");
}

template <class S>
Var cross_entropy(Graph<S>& g, Var log_probs, std::span<const int> labels) {
  const Tensor<S>& lp = g.value(log_probs);
  require(lp.rank() == 2, "cross_entropy: log_probs must be [N, C], got " + shape_string(lp.shape()));
  const std::size_t n = lp.dim(0), c = lp.dim(1);
  require(labels.size() == n, "cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                  std::to_string(n) + " rows");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DataError("cross_entropy: label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(c) +
                      ")");
    }
  }
  S total{0};
  for (std::size_t i = 0; i < n; ++i) total -= lp[i * c + static_cast<std::size_t>(labels[i])];
  Tensor<S> out({1}, total / static_cast<S>(n));
  std::vector<int> picked(labels.begin(), labels.end());
  auto backward = [log_probs, picked = std::move(picked), c](Graph<S>& gr, Var self) {
    const S gy = gr.grad(self)[0];
    Tensor<S>& gx = gr.grad_buffer(log_probs);
    const S per_row = gy / static_cast<S>(picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i) gx[i * c + static_cast<std::size_t>(picked[i])] -= per_row;
  };
  return g.record(std::move(out), {log_probs}, std::move(backward), "cross_entropy");
}

template <class S>
Var add(Graph<S>& g, Var a, Var b) {
  const Tensor<S>& x = g.value(a);
  const Tensor<S>& y = g.value(b);
  require(x.shape() == y.shape(), "add: shapes " + shape_string(x.shape()) + " and " + shape_string(y.shape()) +
                                      " differ");
  Tensor<S> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  auto backward = [a, b](Graph<S>& gr, Var self) {
    const Tensor<S>& gy = gr.grad(self);
    for (Var in : {a, b}) {
      if (!gr.requires_grad(in)) continue;
      Tensor<S>& gx = gr.grad_buffer(in);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
  };
  return g.record(std::move(out), {a, b}, std::move(backward), "add");
}

template <class S>
Var scale(Graph<S>& g, Var x, S factor) {
  const Tensor<S>& in = g.value(x);
  Tensor<S> out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * factor;
  auto backward = [x, factor](Graph<S>& gr, Var self) {
    const Tensor<S>& gy = gr.grad(self);
    Tensor<S>& gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * factor;
  };
  return g.record(std::move(out), {x}, std::move(backward), "scale");
}

template <class S>
Var concat_last(Graph<S>& g, Var a, Var b) {
  const Tensor<S>& x = g.value(a);
  const Tensor<S>& y = g.value(b);
  const auto [rows, na] = rows_and_last(x.shape());
  const auto [rows_b, nb] = rows_and_last(y.shape());
  require(x.rank() == y.rank() && rows == rows_b &&
              std::equal(x.shape().begin(), x.shape().end() - 1, y.shape().begin()),
          "concat_last: leading axes of " + shape_string(x.shape()) + " and " + shape_string(y.shape()) + " differ");
  Shape out_shape = x.shape();
  out_shape.back() = na + nb;
  Tensor<S> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(x.ptr() + r * na, x.ptr() + (r + 1) * na, out.ptr() + r * (na + nb));
    std::copy(y.ptr() + r * nb, y.ptr() + (r + 1) * nb, out.ptr() + r * (na + nb) + na);
  }
  auto backward = [a, b, rows = rows, na = na, nb = nb](Graph<S>& gr, Var self) {
    const Tensor<S>& gy = gr.grad(self);
    const std::size_t n = na + nb;
    if (gr.requires_grad(a)) {
      Tensor<S>& ga = gr.grad_buffer(a);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < na; ++j) ga[r * na + j] += gy[r * n + j];
    }
    if (gr.requires_grad(b)) {
      Tensor<S>& gb = gr.grad_buffer(b);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < nb; ++j) gb[r * nb + j] += gy[r * n + na + j];
    }
  };
  return g.record(std::move(out), {a, b}, std::move(backward), "concat_last");
}

template <class S>
Var concat_rows(Graph<S>& g, const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const Shape& first = g.value(parts.front()).shape();
  std::size_t total_rows = 0;
  std::vector<std::size_t> sizes;
  for (Var p : parts) {
    const Shape& s = g.value(p).shape();
    require(s.size() == first.size() && std::equal(s.begin() + 1, s.end(), first.begin() + 1),
            "concat_rows: trailing axes of " + shape_string(s) + " and " + shape_string(first) + " differ");
    total_rows += s[0];
    sizes.push_back(g.value(p).size());
  }
  Shape out_shape = first;
  out_shape[0] = total_rows;
  Tensor<S> out(out_shape);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor<S>& v = g.value(p);
    std::copy(v.ptr(), v.ptr() + v.size(), out.ptr() + offset);
    offset += v.size();
  }
  auto backward = [parts, sizes = std::move(sizes)](Graph<S>& gr, Var self) {
    const Tensor<S>& gy = gr.grad(self);
    std::size_t off = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (gr.requires_grad(parts[i])) {
        Tensor<S>& gx = gr.grad_buffer(parts[i]);
        for (std::size_t j = 0; j < sizes[i]; ++j) gx[j] += gy[off + j];
      }
      off += sizes[i];
    }
  };
  return g.record(std::move(out), parts, std::move(backward), "concat_rows");
}

template <class S>
Var mean_over_time(Graph<S>& g, Var x) {
  const Tensor<S>& in = g.value(x);
  const auto d = seq_dims(in.shape(), "mean_over_time");
  Tensor<S> out({d.batch, d.channels});
  const S inv_t = S{1} / static_cast<S>(d.time);
  for (std::size_t b = 0; b < d.batch; ++b) {
    S* o = out.ptr() + b * d.channels;
    for (std::size_t t = 0; t < d.time; ++t) {
      const S* row = in.ptr() + (b * d.time + t) * d.channels;
      for (std::size_t c = 0; c < d.channels; ++c) o[c] += row[c];
    }
    for (std::size_t c = 0; c < d.channels; ++c) o[c] *= inv_t;
  }
  auto backward = [x, d, inv_t](Graph<S>& gr, Var self) {
    const Tensor<S>& gy = gr.grad(self);
    Tensor<S>& gx = gr.grad_buffer(x);
    for (std::size_t b = 0; b < d.batch; ++b)
      for (std::size_t t = 0; t < d.time; ++t)
        for (std::size_t c = 0; c < d.channels; ++c)
          gx[(b * d.time + t) * d.channels + c] += gy[b * d.channels + c] * inv_t;
  };
  return g.record(std::move(out), {x}, std::move(backward), "mean_over_time");
}

template <class S>
Var last_step(Graph<S>& g, Var x) {
  const Tensor<S>& in = g.value(x);
  const auto d = seq_dims(in.shape(), "last_step");
  Tensor<S> out({d.batch, d.channels});
  for (std::size_t b = 0; b < d.batch; ++b) {
    const S* row = in.ptr() + (b * d.time + d.time - 1) * d.channels;
    std::copy(row, row + d.channels, out.ptr() + b * d.channels);
  }
  auto backward = [x, d](Graph<S>& gr, Var self) {
    const Tensor<S>& gy = gr.grad(self);
    Tensor<S>& gx = gr.grad_buffer(x);
    for (std::size_t b = 0; b < d.batch; ++b)
      for (std::size_t c = 0; c < d.channels; ++c)
        gx[(b * d.time + d.time - 1) * d.channels + c] += gy[b * d.channels + c];
  };
  return g.record(std::move(out), {x}, std::move(backward), "last_step");
}

#define ACTREC_INSTANTIATE_OPS(S)                                                          \
  template Var conv1d_dilated<S>(Graph<S>&, Var, Var, Var, int, bool);                     \
  template Var dense<S>(Graph<S>&, Var, Var, Var);                                         \
  template Var relu<S>(Graph<S>&, Var);                                                    \
  template Var sigmoid<S>(Graph<S>&, Var);                                                 \
  template Var tanh<S>(Graph<S>&, Var);                                                    \
  template Var softmax<S>(Graph<S>&, Var);                                                 \
  template Var log_softmax<S>(Graph<S>&, Var);                                             \
  template Var cross_entropy<S>(Graph<S>&, Var, std::span<const int>);                     \
  template Var add<S>(Graph<S>&, Var, Var);                                                \
  template Var scale<S>(Graph<S>&, Var, S);                                                \
  template Var concat_last<S>(Graph<S>&, Var, Var);                                        \
  template Var concat_rows<S>(Graph<S>&, const std::vector<Var>&);                         \
  template Var mean_over_time<S>(Graph<S>&, Var);                                          \
  template Var last_step<S>(Graph<S>&, Var);

ACTREC_INSTANTIATE_OPS(float)
ACTREC_INSTANTIATE_OPS(double)

}  // namespace actrec::num
