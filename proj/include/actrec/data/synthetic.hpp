#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "actrec/data/feature_sequence.hpp"
#include "actrec/data/manifest.hpp"

namespace actrec::data {

struct SynthSpec {
  std::size_t n_subjects = 30;
  std::size_t clips_per_subject = 6;
  std::size_t frames = 20;
  std::size_t dim = 64;
  double noise_sigma = 0.3;
  double subject_effect_sigma = 0.2;
  std::uint64_t seed = 1;

  /// Throws ConfigError for zero counts or negative sigmas.
  void validate() const;
  bool operator==(const SynthSpec&) const = default;
};

nlohmann::json to_json(const SynthSpec& spec);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
SynthSpec synth_spec_from_json(const nlohmann::json& j);

struct SynthClip {
  ClipRecord record;
  FeatureSequence features;
};

/// Class c has a random unit direction u_c and motif sin(2 pi (c + 1) t / T).
/// A clip is motif(t) * u_c + subject offset + N(0, noise_sigma^2) noise.
/// Labels cycle through the classes across the whole dataset, so every class
/// count is within one of every other. Deterministic in spec.seed.
std::vector<SynthClip> generate_clips(const SynthSpec& spec);

/// Writes features/<clip_id>.fsq and manifest.jsonl under `out_dir`.
/// Returns the manifest path.
std::filesystem::path write_synthetic_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace actrec::data
