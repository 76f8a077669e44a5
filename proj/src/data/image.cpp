#include "actrec/data/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "actrec/data/atomic_file.hpp"
#include "actrec/error.hpp"

namespace actrec::data {

namespace {

class PnmReader {
 public:
  explicit PnmReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 1'000'000'000ul) throw FormatError(std::string("pnm ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("pnm: expected ") + what, start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  unsigned char byte(std::size_t i) const { return static_cast<unsigned char>(bytes_[pos_ + i]); }
  bool at_end() const { return pos_ >= bytes_.size(); }
  char peek() const { return bytes_[pos_]; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_pnm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '3' && bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("unsupported image: expected P2, P3, P5 or P6 header", 0);
  }
  const char kind = bytes[1];
  const bool ascii = kind == '2' || kind == '3';
  const std::size_t channels = (kind == '3' || kind == '6') ? 3 : 1;
  PnmReader r(bytes);
  r.advance(2);
  const unsigned long width = r.number("width");
  const unsigned long height = r.number("height");
  const unsigned long maxval = r.number("maxval");
  if (width == 0 || height == 0) throw FormatError("pnm image has zero size", r.pos());
  if (maxval == 0 || maxval > 65535) throw FormatError("pnm maxval must be in [1, 65535]", r.pos());

  Image img(height, width, channels);
  const std::size_t count = img.pixels.size();
  const auto max = static_cast<float>(maxval);
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t at = r.pos();
      const unsigned long v = r.number("sample");
      if (v > maxval) throw FormatError("pnm sample exceeds maxval", at);
      img.pixels[i] = static_cast<float>(v) / max;
    }
    return img;
  }
  // Exactly one whitespace byte separates the header from binary samples.
  if (r.at_end() || !std::isspace(static_cast<unsigned char>(r.peek()))) {
    throw FormatError("pnm header not terminated by whitespace", r.pos());
  }
  r.advance(1);
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  if (r.remaining() < count * sample_bytes) throw FormatError("truncated pnm pixel data", bytes.size());
  for (std::size_t i = 0; i < count; ++i) {
    unsigned long v = r.byte(i * sample_bytes);
    if (sample_bytes == 2) v = (v << 8) | r.byte(i * 2 + 1);
    if (v > maxval) throw FormatError("pnm sample exceeds maxval", r.pos() + i * sample_bytes);
    img.pixels[i] = static_cast<float>(v) / max;
  }
  return img;
}

Image read_pnm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_pnm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

std::string encode_pnm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw DataError("pnm output needs 1 or 3 channels");
  if (image.width == 0 || image.height == 0) throw DataError("cannot encode an empty image");
  std::string out = std::string(image.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.pixels.size());
  for (float v : image.pixels) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0f))));
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, const Image& image) { write_file_atomic(path, encode_pnm(image)); }

Image to_grayscale(const Image& image) {
  if (image.channels == 1) return image;
  Image out(image.height, image.width, 1);
  const float inv = 1.0f / static_cast<float>(image.channels);
  for (std::size_t p = 0; p < image.height * image.width; ++p) {
    float sum = 0.0f;
    for (std::size_t c = 0; c < image.channels; ++c) sum += image.pixels[p * image.channels + c];
    out.pixels[p] = sum * inv;
  }
  return out;
}

}  // namespace actrec::data
