#pragma once

#include <cstddef>
#include <vector>

namespace actrec::data {

inline constexpr std::size_t kDefaultKeyframes = 20;

/// floor(i * total / n) for i in [0, n). Short clips repeat frames.
/// Throws ConfigError when either argument is zero.
std::vector<std::size_t> sample_keyframes(std::size_t total_frames, std::size_t n = kDefaultKeyframes);

}  // namespace actrec::data
