#include "actrec/data/toy_extract.hpp"

#include <algorithm>
#include <cmath>

#include "actrec/error.hpp"

namespace actrec::data {

std::vector<float> average_pool(const Image& gray, std::size_t grid) {
  if (gray.channels != 1) throw DataError("average_pool expects a grayscale image");
  if (grid == 0 || grid > gray.height || grid > gray.width) {
    throw ConfigError("pool grid " + std::to_string(grid) + " does not fit a " + std::to_string(gray.height) + "x" +
                      std::to_string(gray.width) + " frame");
  }
  std::vector<float> cells(grid * grid);
  for (std::size_t gy = 0; gy < grid; ++gy) {
    const std::size_t ya = gy * gray.height / grid;
    const std::size_t yb = (gy + 1) * gray.height / grid;
    for (std::size_t gx = 0; gx < grid; ++gx) {
      const std::size_t xa = gx * gray.width / grid;
      const std::size_t xb = (gx + 1) * gray.width / grid;
      double sum = 0.0;
      for (std::size_t y = ya; y < yb; ++y) {
        for (std::size_t x = xa; x < xb; ++x) sum += gray.at(y, x);
      }
      const double mean = sum / static_cast<double>((yb - ya) * (xb - xa));
      cells[gy * grid + gx] = static_cast<float>(std::clamp(mean, 0.0, 1.0));
    }
  }
  return cells;
}

FeatureSequence toy_extract(std::span<const Image> frames, std::size_t grid) {
  if (frames.empty()) throw DataError("toy_extract needs at least one frame");
  const std::size_t cells = grid * grid;
  FeatureSequence seq(frames.size(), 2 * cells);
  std::vector<float> previous;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Image& f = frames[t];
    if (f.height != frames[0].height || f.width != frames[0].width) {
      throw DataError("frame " + std::to_string(t) + " is " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                      ", expected " + std::to_string(frames[0].height) + "x" + std::to_string(frames[0].width));
    }
    std::vector<float> pooled = average_pool(to_grayscale(f), grid);
    auto row = seq.row(t);
    for (std::size_t i = 0; i < cells; ++i) {
      row[i] = pooled[i];
      row[cells + i] = t == 0 ? 0.0f : std::fabs(pooled[i] - previous[i]);
    }
    previous = std::move(pooled);
  }
  return seq;
}

}  // namespace actrec::data
