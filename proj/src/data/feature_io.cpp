#include "actrec/data/feature_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "actrec/data/atomic_file.hpp"
#include "actrec/error.hpp"

namespace actrec::data {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string encode_features(const FeatureSequence& seq) {
  if (seq.frames == 0 || seq.dim == 0) throw DataError("feature sequence must have T >= 1 and D >= 1");
  if (seq.values.size() != seq.frames * seq.dim) throw DataError("feature sequence holds the wrong number of values");
  if (seq.frames > UINT32_MAX || seq.dim > UINT32_MAX) throw DataError("feature sequence too large for the format");
  std::string out;
  out.reserve(kFeatureHeaderBytes + 4 * seq.values.size());
  out.append(kFeatureMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(seq.frames));
  put_u32(out, static_cast<std::uint32_t>(seq.dim));
  for (std::size_t i = 0; i < seq.values.size(); ++i) {
    const float v = seq.values[i];
    if (!std::isfinite(v)) throw DataError("non-finite feature value at index " + std::to_string(i));
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

FeatureSequence decode_features(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw FormatError("bad feature file magic (expected FSQ1)", 0);
  }
  if (bytes.size() < kFeatureHeaderBytes) throw FormatError("truncated feature file header", bytes.size());
  const std::uint64_t frames = get_u32(bytes, 4);
  const std::uint64_t dim = get_u32(bytes, 8);
  if (frames == 0) throw FormatError("feature file declares T = 0", 4);
  if (dim == 0) throw FormatError("feature file declares D = 0", 8);
  const std::uint64_t expected = frames * dim * 4;
  const std::uint64_t payload = bytes.size() - kFeatureHeaderBytes;
  if (payload < expected) {
    throw FormatError("truncated feature payload: header needs " + std::to_string(expected) + " bytes, found " +
                          std::to_string(payload),
                      bytes.size());
  }
  if (payload > expected) {
    throw FormatError("trailing bytes after feature payload (" + std::to_string(payload - expected) + " extra)",
                      kFeatureHeaderBytes + expected);
  }
  FeatureSequence seq(static_cast<std::size_t>(frames), static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < seq.values.size(); ++i) {
    const std::size_t offset = kFeatureHeaderBytes + 4 * i;
    const float v = std::bit_cast<float>(get_u32(bytes, offset));
    if (!std::isfinite(v)) throw FormatError("non-finite feature value", offset);
    seq.values[i] = v;
  }
  return seq;
}

void write_features(const std::filesystem::path& path, const FeatureSequence& seq) {
  write_file_atomic(path, encode_features(seq));
}

FeatureSequence read_features(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_features(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace actrec::data
