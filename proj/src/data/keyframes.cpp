#include "actrec/data/keyframes.hpp"

#include "actrec/error.hpp"

namespace actrec::data {

std::vector<std::size_t> sample_keyframes(std::size_t total_frames, std::size_t n) {
  if (total_frames == 0 || n == 0) throw ConfigError("sample_keyframes needs total_frames >= 1 and n >= 1");
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i * total_frames / n;
  return out;
}

}  // namespace actrec::data
