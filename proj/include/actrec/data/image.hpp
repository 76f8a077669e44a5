#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace actrec::data {

/// Interleaved H x W x channels image with intensities in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  float& at(std::size_t y, std::size_t x, std::size_t c = 0) { return pixels[(y * width + x) * channels + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c = 0) const { return pixels[(y * width + x) * channels + c]; }

  bool operator==(const Image&) const = default;
};

/// Reads binary or ASCII portable pixel maps (P2, P3, P5, P6). Sample values
/// are divided by the file's maxval. Throws FormatError on malformed input.
Image read_pnm(const std::filesystem::path& path);
Image decode_pnm(std::string_view bytes);

/// Writes P5 (one channel) or P6 (three channels) with maxval 255.
void write_pnm(const std::filesystem::path& path, const Image& image);
std::string encode_pnm(const Image& image);

/// Channel mean for RGB, identity for one channel.
Image to_grayscale(const Image& image);

}  // namespace actrec::data
