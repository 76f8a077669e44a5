#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace actrec::data {

/// The closed action vocabulary. Numeric values are the class ids.
enum class ActionLabel : int { arm_flapping = 0, headbanging = 1, spinning = 2 };

inline constexpr int kNumActions = 3;
inline constexpr std::array<std::string_view, kNumActions> kActionNames = {"arm_flapping", "headbanging", "spinning"};

std::string_view to_string(ActionLabel label);
ActionLabel parse_action(std::string_view text);
inline int label_id(ActionLabel label) { return static_cast<int>(label); }
ActionLabel label_from_id(int id);

struct ClipRecord {
  std::string clip_id;
  std::string subject_id;
  ActionLabel label = ActionLabel::arm_flapping;
  std::string feature_path;  // relative paths resolve against the manifest directory
  std::size_t n_frames = 0;
  std::optional<std::string> source_note;

  bool operator==(const ClipRecord&) const = default;
};

nlohmann::json to_json(const ClipRecord& record);
ClipRecord clip_from_json(const nlohmann::json& j);

/// Newline-delimited JSON clip index.
class Manifest {
 public:
  Manifest() = default;
  /// Throws DataError on a duplicate clip_id.
  Manifest(std::vector<ClipRecord> records, std::filesystem::path base_dir = {});

  const std::vector<ClipRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  std::filesystem::path resolve(const ClipRecord& record) const;

  /// Records whose subject is in `subjects`, sorted by clip_id.
  Manifest filter_subjects(const std::vector<std::string>& subjects) const;

  std::vector<std::string> subjects() const;  // sorted, unique

 private:
  std::vector<ClipRecord> records_;
  std::filesystem::path base_dir_;
};

/// Throws FormatError with the byte offset of the first bad line.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ClipRecord>& records);
std::string encode_manifest(const std::vector<ClipRecord>& records);

}  // namespace actrec::data
