#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "actrec/data/feature_sequence.hpp"

namespace actrec::stream {

/// Fixed-capacity FIFO of the most recent frames. Frame indices count every
/// frame ever pushed, starting at 0.
class SlidingWindow {
 public:
  /// Throws StreamError when capacity or dim is zero.
  SlidingWindow(std::size_t capacity, std::size_t dim);

  /// Appends a frame, evicting the oldest when full. Throws StreamError on a
  /// dimension mismatch.
  void push(std::span<const float> frame);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return size_; }
  bool full() const noexcept { return size_ == capacity_; }
  std::size_t frames_seen() const noexcept { return seen_; }
  /// Index of the oldest resident frame (meaningful when size() > 0).
  std::size_t oldest_index() const noexcept { return seen_ - size_; }

  /// Resident frames, oldest first.
  data::FeatureSequence snapshot() const;

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::vector<float> ring_;
  std::size_t head_ = 0;  // slot the next frame is written to
  std::size_t size_ = 0;
  std::size_t seen_ = 0;
};

}  // namespace actrec::stream
