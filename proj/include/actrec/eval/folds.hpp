#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "actrec/data/manifest.hpp"

namespace actrec::eval {

struct Fold {
  std::vector<std::string> subjects;  // sorted
  long clip_count = 0;

  bool operator==(const Fold&) const = default;
};

/// Subject-disjoint partition of a manifest.
struct FoldPlan {
  std::vector<Fold> folds;
  std::uint64_t seed = 0;

  std::size_t size() const { return folds.size(); }
  /// Index of the fold holding `subject`; throws ConfigError if absent.
  std::size_t fold_of(const std::string& subject) const;
  /// Held-out clips of fold k, sorted by clip_id.
  data::Manifest test_set(const data::Manifest& manifest, std::size_t k) const;
  /// Clips of all other folds, sorted by clip_id.
  data::Manifest train_set(const data::Manifest& manifest, std::size_t k) const;

  bool operator==(const FoldPlan& other) const { return folds == other.folds; }
};

/// Subjects in order of descending clip count (ties by id) each join the fold
/// with the fewest clips so far. Among equally small folds the one with fewer
/// subjects wins, then a per-fold priority drawn from `seed`.
/// Throws ConfigError when there are fewer subjects than folds.
FoldPlan make_folds(const data::Manifest& manifest, std::size_t k = 5, std::uint64_t seed = 0);

nlohmann::json to_json(const FoldPlan& plan);

}  // namespace actrec::eval
