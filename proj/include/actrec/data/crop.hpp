#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "actrec/data/image.hpp"

namespace actrec::data {

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  double area() const { return width * height; }
  bool operator==(const BBox&) const = default;
};

/// One externally produced person detection.
struct CropRecord {
  int frame_index = 0;
  BBox bbox;
  double confidence = 0.0;

  bool operator==(const CropRecord&) const = default;
};

inline constexpr double kDefaultCropMargin = 0.10;

CropRecord crop_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CropRecord& record);

/// A JSON array of {frame_index, bbox: [x, y, w, h], confidence}.
std::vector<CropRecord> read_crop_records(const std::filesystem::path& path);
void write_crop_records(const std::filesystem::path& path, std::span<const CropRecord> records);

/// Highest confidence; ties go to the larger box, then the earlier entry.
/// Throws DataError on an empty list.
CropRecord select_target_box(std::span<const CropRecord> detections);

/// Expands the box by `margin_fraction` of its size on every side, clamps it
/// to the frame, crops, and resizes bilinearly (corner-aligned) to a square.
/// Throws DataError when nothing of the box remains inside the frame.
Image apply_crop(const Image& frame, const CropRecord& crop, double margin_fraction, std::size_t out_size);

/// Bilinear resize with corner alignment: output corners sample input corners.
Image resize_bilinear(const Image& image, std::size_t out_height, std::size_t out_width);

}  // namespace actrec::data
