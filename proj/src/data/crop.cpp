#include "actrec/data/crop.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "actrec/data/atomic_file.hpp"
#include "actrec/error.hpp"

namespace actrec::data {

CropRecord crop_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("crop record must be a JSON object");
  static const std::set<std::string> known = {"frame_index", "bbox", "confidence"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw DataError("crop record: unknown field '" + key + "'");
  }
  try {
    CropRecord r;
    r.frame_index = j.at("frame_index").get<int>();
    const auto& box = j.at("bbox");
    if (!box.is_array() || box.size() != 4) throw DataError("crop record: bbox must be [x, y, w, h]");
    r.bbox = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
    r.confidence = j.at("confidence").get<double>();
    if (r.frame_index < 0) throw DataError("crop record: negative frame_index");
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) throw DataError("crop record: confidence outside [0, 1]");
    if (!(r.bbox.width >= 0.0 && r.bbox.height >= 0.0)) throw DataError("crop record: negative bbox size");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("crop record: ") + e.what());
  }
}

nlohmann::json to_json(const CropRecord& r) {
  return {{"frame_index", r.frame_index},
          {"bbox", {r.bbox.x, r.bbox.y, r.bbox.width, r.bbox.height}},
          {"confidence", r.confidence}};
}

std::vector<CropRecord> read_crop_records(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": malformed crop records: " + e.what(), e.byte);
  }
  if (!doc.is_array()) throw FormatError(path.string() + ": crop records must be a JSON array", 0);
  std::vector<CropRecord> out;
  out.reserve(doc.size());
  for (const auto& item : doc) out.push_back(crop_from_json(item));
  return out;
}

void write_crop_records(const std::filesystem::path& path, std::span<const CropRecord> records) {
  nlohmann::json doc = nlohmann::json::array();
  for (const CropRecord& r : records) doc.push_back(to_json(r));
  write_file_atomic(path, doc.dump(2) + "\n");
}

CropRecord select_target_box(std::span<const CropRecord> detections) {
  if (detections.empty()) throw DataError("select_target_box: no detections");
  std::size_t best = 0;
  for (std::size_t i = 1; i < detections.size(); ++i) {
    const CropRecord& a = detections[i];
    const CropRecord& b = detections[best];
    if (a.confidence > b.confidence || (a.confidence == b.confidence && a.bbox.area() > b.bbox.area())) best = i;
  }
  return detections[best];
}

Image resize_bilinear(const Image& image, std::size_t out_height, std::size_t out_width) {
  if (image.height == 0 || image.width == 0) throw DataError("cannot resize an empty image");
  if (out_height == 0 || out_width == 0) throw ConfigError("resize target must be non-empty");
  Image out(out_height, out_width, image.channels);
  auto source = [](std::size_t i, std::size_t out_n, std::size_t in_n) {
    if (out_n == 1) return 0.5 * static_cast<double>(in_n - 1);
    return static_cast<double>(i) * static_cast<double>(in_n - 1) / static_cast<double>(out_n - 1);
  };
  for (std::size_t oy = 0; oy < out_height; ++oy) {
    const double sy = source(oy, out_height, image.height);
    const auto y0 = static_cast<std::size_t>(std::floor(sy));
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_width; ++ox) {
      const double sx = source(ox, out_width, image.width);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < image.channels; ++c) {
        const double top = (1.0 - fx) * image.at(y0, x0, c) + fx * image.at(y0, x1, c);
        const double bottom = (1.0 - fx) * image.at(y1, x0, c) + fx * image.at(y1, x1, c);
        out.at(oy, ox, c) = static_cast<float>((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

Image apply_crop(const Image& frame, const CropRecord& crop, double margin_fraction, std::size_t out_size) {
  if (!(margin_fraction >= 0.0)) throw ConfigError("crop margin must be >= 0");
  if (out_size == 0) throw ConfigError("crop output size must be positive");
  const BBox& b = crop.bbox;
  const double mx = margin_fraction * b.width;
  const double my = margin_fraction * b.height;
  const double fw = static_cast<double>(frame.width);
  const double fh = static_cast<double>(frame.height);
  const double left = std::clamp(b.x - mx, 0.0, fw);
  const double right = std::clamp(b.x + b.width + mx, 0.0, fw);
  const double top = std::clamp(b.y - my, 0.0, fh);
  const double bottom = std::clamp(b.y + b.height + my, 0.0, fh);
  // Pixel columns [x0, x1) covered by the clamped box.
  const auto x0 = static_cast<std::size_t>(std::floor(left));
  const auto x1 = static_cast<std::size_t>(std::ceil(right));
  const auto y0 = static_cast<std::size_t>(std::floor(top));
  const auto y1 = static_cast<std::size_t>(std::ceil(bottom));
  if (x1 <= x0 || y1 <= y0) throw DataError("crop box is empty after clamping to the frame");

  Image region(y1 - y0, x1 - x0, frame.channels);
  for (std::size_t y = y0; y < y1; ++y) {
    for (std::size_t x = x0; x < x1; ++x) {
      for (std::size_t c = 0; c < frame.channels; ++c) region.at(y - y0, x - x0, c) = frame.at(y, x, c);
    }
  }
  return resize_bilinear(region, out_size, out_size);
}

}  // namespace actrec::data
