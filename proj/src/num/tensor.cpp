#include "actrec/num/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "actrec/error.hpp"

namespace actrec::num {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
void check_dims(const Shape& shape) {
  if (shape.empty()) throw ConfigError("tensor shape must have at least one axis");
  for (std::size_t d : shape) {
    if (d == 0) throw ConfigError("tensor shape " + shape_string(shape) + " has a zero axis");
  }
}
}  // namespace

template <class S>
Tensor<S>::Tensor(Shape shape, S fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(shape_numel(shape_), fill);
}

template <class S>
Tensor<S>::Tensor(Shape shape, std::vector<S> values) : shape_(std::move(shape)), data_(std::move(values)) {
  check_dims(shape_);
  if (data_.size() != shape_numel(shape_)) {
    throw ConfigError("tensor shape " + shape_string(shape_) + " needs " + std::to_string(shape_numel(shape_)) +
                      " values, got " + std::to_string(data_.size()));
  }
}

template <class S>
Tensor<S> Tensor<S>::reshaped(Shape shape) const {
  return Tensor<S>(std::move(shape), data_);
}

template <class S>
void Tensor<S>::fill(S value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <class S>
bool Tensor<S>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](S v) { return std::isfinite(v); });
}

template <class S>
void NamedTensors<S>::add(std::string name, Tensor<S> value) {
  if (index_.count(name)) throw ConfigError("duplicate tensor name '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
}

template <class S>
std::size_t NamedTensors<S>::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("no tensor named '" + name + "'");
  return it->second;
}

template <class S>
std::size_t NamedTensors<S>::total_elements() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template class Tensor<float>;
template class Tensor<double>;
template class NamedTensors<float>;
template class NamedTensors<double>;

}  // namespace actrec::num
