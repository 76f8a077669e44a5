#pragma once

#include <filesystem>

#include "actrec/data/feature_sequence.hpp"

namespace actrec::data {

// Feature file layout, all little-endian:
//   bytes 0..3   "FSQ1"
//   bytes 4..7   uint32 T
//   bytes 8..11  uint32 D
//   then T*D IEEE-754 float32 values, frame-major.

inline constexpr char kFeatureMagic[4] = {'F', 'S', 'Q', '1'};
inline constexpr std::size_t kFeatureHeaderBytes = 12;

/// Writes atomically (temp file + rename). Throws DataError on an empty or
/// non-finite sequence.
void write_features(const std::filesystem::path& path, const FeatureSequence& seq);

/// Throws FormatError (with byte offset) on bad magic, truncated or oversized
/// payload, zero dimensions, or non-finite values.
FeatureSequence read_features(const std::filesystem::path& path);

/// Serialized bytes, exactly as written to disk.
std::string encode_features(const FeatureSequence& seq);
FeatureSequence decode_features(std::string_view bytes);

}  // namespace actrec::data
