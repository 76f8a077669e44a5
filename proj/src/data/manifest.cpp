#include "actrec/data/manifest.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "actrec/data/atomic_file.hpp"
#include "actrec/error.hpp"

namespace actrec::data {

std::string_view to_string(ActionLabel label) {
  return kActionNames.at(static_cast<std::size_t>(label));
}

ActionLabel parse_action(std::string_view text) {
  for (int i = 0; i < kNumActions; ++i) {
    if (kActionNames[static_cast<std::size_t>(i)] == text) return static_cast<ActionLabel>(i);
  }
  throw DataError("unknown action label '" + std::string(text) + "' (expected arm_flapping, headbanging, spinning)");
}

ActionLabel label_from_id(int id) {
  if (id < 0 || id >= kNumActions) throw DataError("label id " + std::to_string(id) + " outside [0, 3)");
  return static_cast<ActionLabel>(id);
}

nlohmann::json to_json(const ClipRecord& r) {
  nlohmann::json j{{"clip_id", r.clip_id},
                   {"subject_id", r.subject_id},
                   {"label", std::string(to_string(r.label))},
                   {"feature_path", r.feature_path},
                   {"n_frames", r.n_frames}};
  j["source_note"] = r.source_note ? nlohmann::json(*r.source_note) : nlohmann::json(nullptr);
  return j;
}

ClipRecord clip_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("clip record must be a JSON object");
  static const std::set<std::string> known = {"clip_id", "subject_id", "label", "feature_path", "n_frames",
                                              "source_note"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw DataError("clip record: unknown field '" + key + "'");
  }
  try {
    ClipRecord r;
    r.clip_id = j.at("clip_id").get<std::string>();
    r.subject_id = j.at("subject_id").get<std::string>();
    r.label = parse_action(j.at("label").get<std::string>());
    r.feature_path = j.at("feature_path").get<std::string>();
    r.n_frames = j.at("n_frames").get<std::size_t>();
    if (j.contains("source_note") && !j["source_note"].is_null()) r.source_note = j["source_note"].get<std::string>();
    if (r.clip_id.empty() || r.subject_id.empty()) throw DataError("clip record: empty clip_id or subject_id");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("clip record: ") + e.what());
  }
}

Manifest::Manifest(std::vector<ClipRecord> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  std::unordered_set<std::string> seen;
  for (const ClipRecord& r : records_) {
    if (!seen.insert(r.clip_id).second) throw DataError("duplicate clip_id '" + r.clip_id + "' in manifest");
  }
}

std::filesystem::path Manifest::resolve(const ClipRecord& record) const {
  std::filesystem::path p(record.feature_path);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

Manifest Manifest::filter_subjects(const std::vector<std::string>& subjects) const {
  const std::unordered_set<std::string> keep(subjects.begin(), subjects.end());
  std::vector<ClipRecord> out;
  for (const ClipRecord& r : records_) {
    if (keep.count(r.subject_id)) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const ClipRecord& a, const ClipRecord& b) { return a.clip_id < b.clip_id; });
  return Manifest(std::move(out), base_dir_);
}

std::vector<std::string> Manifest::subjects() const {
  std::set<std::string> s;
  for (const ClipRecord& r : records_) s.insert(r.subject_id);
  return {s.begin(), s.end()};
}

Manifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<ClipRecord> records;
  std::size_t offset = 0;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + offset, end - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      try {
        records.push_back(clip_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": malformed manifest line: " + e.what(), offset);
      } catch (const FormatError&) {
        throw;
      } catch (const DataError& e) {
        throw FormatError(path.string() + ": " + e.what(), offset);
      }
    }
    offset = end + 1;
  }
  return Manifest(std::move(records), path.parent_path());
}

std::string encode_manifest(const std::vector<ClipRecord>& records) {
  std::string out;
  for (const ClipRecord& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ClipRecord>& records) {
  Manifest check(records);
  (void)check;
  write_file_atomic(path, encode_manifest(records));
}

}  // namespace actrec::data
