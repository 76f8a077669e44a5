#include "actrec/stream/sliding_window.hpp"

#include <algorithm>
#include <string>

#include "actrec/error.hpp"

namespace actrec::stream {

SlidingWindow::SlidingWindow(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), ring_(capacity * dim) {
  if (capacity == 0 || dim == 0) throw StreamError("sliding window needs positive capacity and dimension");
}

void SlidingWindow::push(std::span<const float> frame) {
  if (frame.size() != dim_) {
    throw StreamError("frame has " + std::to_string(frame.size()) + " features, stream expects " + std::to_string(dim_));
  }
  std::copy(frame.begin(), frame.end(), ring_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++seen_;
}

data::FeatureSequence SlidingWindow::snapshot() const {
  data::FeatureSequence seq(size_, dim_);
  const std::size_t start = (head_ + capacity_ - size_) % capacity_;
  for (std::size_t i = 0; i < size_; ++i) {
    const std::size_t slot = (start + i) % capacity_;
    std::copy_n(ring_.begin() + static_cast<std::ptrdiff_t>(slot * dim_), dim_, seq.row(i).begin());
  }
  return seq;
}

}  // namespace actrec::stream
