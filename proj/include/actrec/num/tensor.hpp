#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace actrec::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor with value semantics. A default-constructed tensor is
/// empty (no shape, no storage) and is used as "not allocated".
template <class S>
class Tensor {
 public:
  using value_type = S;

  Tensor() = default;
  explicit Tensor(Shape shape, S fill = S{0});
  Tensor(Shape shape, std::vector<S> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  S* ptr() noexcept { return data_.data(); }
  const S* ptr() const noexcept { return data_.data(); }
  std::span<S> values() noexcept { return data_; }
  std::span<const S> values() const noexcept { return data_; }

  S& operator[](std::size_t i) { return data_[i]; }
  S operator[](std::size_t i) const { return data_[i]; }

  /// Same storage, new shape; element count must match.
  Tensor reshaped(Shape shape) const;
  void fill(S value);
  bool all_finite() const;

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<S> data_;
};

/// Named tensors kept in insertion order. Used for model parameters,
/// gradients and optimizer moments.
template <class S>
class NamedTensors {
 public:
  void add(std::string name, Tensor<S> value);

  std::size_t size() const noexcept { return tensors_.size(); }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;

  const std::string& name(std::size_t i) const { return names_.at(i); }
  Tensor<S>& at(std::size_t i) { return tensors_.at(i); }
  const Tensor<S>& at(std::size_t i) const { return tensors_.at(i); }
  Tensor<S>& at(const std::string& name) { return tensors_[index_of(name)]; }
  const Tensor<S>& at(const std::string& name) const { return tensors_[index_of(name)]; }

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t total_elements() const;

  template <class U>
  NamedTensors<U> cast() const {
    NamedTensors<U> out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensors_[i].template cast<U>());
    return out;
  }

  bool operator==(const NamedTensors& other) const {
    return names_ == other.names_ && tensors_ == other.tensors_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<S>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class NamedTensors<float>;
extern template class NamedTensors<double>;

}  // namespace actrec::num
