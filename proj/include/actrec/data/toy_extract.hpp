#pragma once

#include <span>

#include "actrec/data/feature_sequence.hpp"
#include "actrec/data/image.hpp"

namespace actrec::data {

/// Per frame: the g x g average-pooled grayscale image followed by the
/// absolute difference from the previous frame's pooled grid (zeros for the
/// first frame). D = 2 g^2, all values in [0, 1].
/// Throws DataError on no frames or mismatched frame sizes, ConfigError when
/// g is zero or larger than the frame.
FeatureSequence toy_extract(std::span<const Image> frames, std::size_t grid);

/// Mean of each cell in a g x g partition. Cell boundaries are
/// floor(k * size / g), so every pixel lands in exactly one cell.
std::vector<float> average_pool(const Image& gray, std::size_t grid);

}  // namespace actrec::data
