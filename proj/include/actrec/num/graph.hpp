#pragma once

#include <functional>
#include <string>
#include <vector>

#include "actrec/num/tensor.hpp"

namespace actrec::num {

/// Handle to a node of a Graph. Only meaningful for the graph that created it.
struct Var {
  int id = -1;
  bool valid() const noexcept { return id >= 0; }
};

/// Tape for reverse-mode differentiation. Nodes are appended in evaluation
/// order, so iterating the tape backwards is a valid topological order and the
/// gradient accumulation order is fixed.
///
/// A graph is single-threaded; independent graphs may run in parallel.
template <class S>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, Var out)>;

  /// With grad disabled no backward closures are recorded (inference mode).
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  /// Leaf that never receives a gradient.
  Var constant(Tensor<S> value);

  /// Leaf that receives a gradient. The tensor is referenced, not copied, and
  /// must outlive the graph.
  Var parameter(const Tensor<S>& value, std::string name = {});
  Var parameter(Tensor<S>&& value, std::string name = {}) = delete;

  /// Records an op output. The node requires a gradient when any input does.
  Var record(Tensor<S> value, std::initializer_list<Var> inputs, BackwardFn backward, const char* op);
  Var record(Tensor<S> value, const std::vector<Var>& inputs, BackwardFn backward, const char* op);

  const Tensor<S>& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Gradient accumulated for `v`; empty when nothing flowed into it.
  const Tensor<S>& grad(Var v) const;

  /// Gradient buffer for accumulation from a backward closure, zero-initialised
  /// on first access.
  Tensor<S>& grad_buffer(Var v);

  /// Runs reverse accumulation from a single-element output. Clears gradients
  /// from any previous call first.
  void backward(Var loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<S> owned;
    const Tensor<S>* external = nullptr;
    Tensor<S> grad;
    BackwardFn backward;
    std::string name;
    const char* op = "";
    bool requires_grad = false;
    bool is_parameter = false;

    const Tensor<S>& value() const { return external ? *external : owned; }
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace actrec::num
