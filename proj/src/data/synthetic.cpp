#include "actrec/data/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "actrec/data/feature_io.hpp"
#include "actrec/error.hpp"

namespace actrec::data {

void SynthSpec::validate() const {
  if (n_subjects == 0 || clips_per_subject == 0 || frames == 0 || dim == 0) {
    throw ConfigError("synthetic spec needs positive n_subjects, clips_per_subject, T and D");
  }
  if (!(noise_sigma >= 0.0) || !(subject_effect_sigma >= 0.0) || !std::isfinite(noise_sigma) ||
      !std::isfinite(subject_effect_sigma)) {
    throw ConfigError("synthetic noise levels must be finite and >= 0");
  }
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"n_subjects", s.n_subjects},   {"clips_per_subject", s.clips_per_subject},
          {"T", s.frames},                {"D", s.dim},
          {"noise_sigma", s.noise_sigma}, {"subject_effect_sigma", s.subject_effect_sigma},
          {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synth spec must be a JSON object");
  SynthSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_subjects") s.n_subjects = value.get<std::size_t>();
      else if (key == "clips_per_subject") s.clips_per_subject = value.get<std::size_t>();
      else if (key == "T") s.frames = value.get<std::size_t>();
      else if (key == "D") s.dim = value.get<std::size_t>();
      else if (key == "noise_sigma") s.noise_sigma = value.get<double>();
      else if (key == "subject_effect_sigma") s.subject_effect_sigma = value.get<double>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else throw ConfigError("synth spec: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::vector<SynthClip> generate_clips(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<double>> directions(kNumActions, std::vector<double>(spec.dim));
  for (auto& u : directions) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : u) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : u) v /= norm;
  }

  const double T = static_cast<double>(spec.frames);
  std::vector<SynthClip> clips;
  clips.reserve(spec.n_subjects * spec.clips_per_subject);
  std::vector<double> offset(spec.dim);
  std::size_t counter = 0;
  for (std::size_t s = 0; s < spec.n_subjects; ++s) {
    for (double& v : offset) v = spec.subject_effect_sigma * normal(rng);
    char subject[32];
    std::snprintf(subject, sizeof subject, "s%03zu", s);
    for (std::size_t k = 0; k < spec.clips_per_subject; ++k, ++counter) {
      const int c = static_cast<int>(counter % kNumActions);
      const auto& u = directions[static_cast<std::size_t>(c)];
      FeatureSequence seq(spec.frames, spec.dim);
      for (std::size_t t = 0; t < spec.frames; ++t) {
        const double motif = std::sin(2.0 * std::numbers::pi * (c + 1) * static_cast<double>(t) / T);
        for (std::size_t d = 0; d < spec.dim; ++d) {
          // Draw noise even at sigma 0 so the random stream is independent of the noise level.
          const double noise = normal(rng);
          seq.at(t, d) = static_cast<float>(motif * u[d] + offset[d] + spec.noise_sigma * noise);
        }
      }
      char clip_id[48];
      std::snprintf(clip_id, sizeof clip_id, "%s_c%03zu", subject, k);
      ClipRecord r;
      r.clip_id = clip_id;
      r.subject_id = subject;
      r.label = label_from_id(c);
      r.feature_path = "features/" + r.clip_id + ".fsq";
      r.n_frames = spec.frames;
      r.source_note = "synthetic seed=" + std::to_string(spec.seed);
      clips.push_back({std::move(r), std::move(seq)});
    }
  }
  return clips;
}

std::filesystem::path write_synthetic_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  const std::vector<SynthClip> clips = generate_clips(spec);
  std::vector<ClipRecord> records;
  records.reserve(clips.size());
  for (const SynthClip& clip : clips) {
    write_features(out_dir / clip.record.feature_path, clip.features);
    records.push_back(clip.record);
  }
  const auto manifest = out_dir / "manifest.jsonl";
  write_manifest(manifest, records);
  return manifest;
}

}  // namespace actrec::data
