#include "actrec/num/graph.hpp"

#include "actrec/error.hpp"

namespace actrec::num {

template <class S>
typename Graph<S>::Node& Graph<S>::node(Var v) {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) throw ConfigError("invalid graph variable");
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <class S>
const typename Graph<S>::Node& Graph<S>::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) throw ConfigError("invalid graph variable");
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <class S>
Var Graph<S>::constant(Tensor<S> value) {
  if (!value.all_finite()) throw NumericError("non-finite value in graph input");
  Node n;
  n.owned = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <class S>
Var Graph<S>::parameter(const Tensor<S>& value, std::string name) {
  if (!value.all_finite()) throw NumericError("non-finite value in parameter '" + name + "'");
  Node n;
  n.external = &value;
  n.name = std::move(name);
  n.op = "parameter";
  n.requires_grad = grad_enabled_;
  n.is_parameter = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <class S>
Var Graph<S>::record(Tensor<S> value, std::initializer_list<Var> inputs, BackwardFn backward, const char* op) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward), op);
}

template <class S>
Var Graph<S>::record(Tensor<S> value, const std::vector<Var>& inputs, BackwardFn backward, const char* op) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
  bool needs = false;
  if (grad_enabled_) {
    for (Var in : inputs) needs = needs || node(in).requires_grad;
  }
  Node n;
  n.owned = std::move(value);
  n.op = op;
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <class S>
const Tensor<S>& Graph<S>::value(Var v) const {
  return node(v).value();
}

template <class S>
bool Graph<S>::requires_grad(Var v) const {
  return node(v).requires_grad;
}

template <class S>
const Tensor<S>& Graph<S>::grad(Var v) const {
  return node(v).grad;
}

template <class S>
Tensor<S>& Graph<S>::grad_buffer(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad = Tensor<S>(n.value().shape());
  return n.grad;
}

template <class S>
void Graph<S>::backward(Var loss) {
  if (!grad_enabled_) throw ConfigError("backward called on a graph without gradients");
  if (value(loss).size() != 1) throw ConfigError("backward needs a single-element output");
  for (Node& n : nodes_) n.grad = Tensor<S>();
  grad_buffer(loss)[0] = S{1};
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && !n.grad.empty()) n.backward(*this, Var{i});
  }
  for (const Node& n : nodes_) {
    if (n.is_parameter && !n.grad.empty() && !n.grad.all_finite()) {
      throw NumericError("non-finite gradient for parameter '" + n.name + "'");
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace actrec::num
