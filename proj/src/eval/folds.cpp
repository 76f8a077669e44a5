#include "actrec/eval/folds.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "actrec/error.hpp"

namespace actrec::eval {

std::size_t FoldPlan::fold_of(const std::string& subject) const {
  for (std::size_t k = 0; k < folds.size(); ++k) {
    if (std::binary_search(folds[k].subjects.begin(), folds[k].subjects.end(), subject)) return k;
  }
  throw ConfigError("subject '" + subject + "' is not in the fold plan");
}

data::Manifest FoldPlan::test_set(const data::Manifest& manifest, std::size_t k) const {
  if (k >= folds.size()) throw ConfigError("fold index " + std::to_string(k) + " out of range");
  return manifest.filter_subjects(folds[k].subjects);
}

data::Manifest FoldPlan::train_set(const data::Manifest& manifest, std::size_t k) const {
  if (k >= folds.size()) throw ConfigError("fold index " + std::to_string(k) + " out of range");
  std::vector<std::string> subjects;
  for (std::size_t j = 0; j < folds.size(); ++j) {
    if (j != k) subjects.insert(subjects.end(), folds[j].subjects.begin(), folds[j].subjects.end());
  }
  return manifest.filter_subjects(subjects);
}

FoldPlan make_folds(const data::Manifest& manifest, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs at least 2 folds");
  std::map<std::string, long> counts;
  for (const auto& r : manifest.records()) ++counts[r.subject_id];
  if (counts.size() < k) {
    throw ConfigError("cannot split " + std::to_string(counts.size()) + " subjects into " + std::to_string(k) +
                      " subject-disjoint folds");
  }
  std::vector<std::pair<std::string, long>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::size_t> priority(k);
  std::iota(priority.begin(), priority.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = k - 1; i > 0; --i) {
    std::swap(priority[i], priority[static_cast<std::size_t>(rng() % (i + 1))]);
  }

  FoldPlan plan;
  plan.seed = seed;
  plan.folds.resize(k);
  for (const auto& [subject, n] : order) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < k; ++f) {
      const Fold& a = plan.folds[f];
      const Fold& b = plan.folds[best];
      if (a.clip_count != b.clip_count) {
        if (a.clip_count < b.clip_count) best = f;
      } else if (a.subjects.size() != b.subjects.size()) {
        if (a.subjects.size() < b.subjects.size()) best = f;
      } else if (priority[f] < priority[best]) {
        best = f;
      }
    }
    plan.folds[best].subjects.push_back(subject);
    plan.folds[best].clip_count += n;
  }
  for (Fold& f : plan.folds) std::sort(f.subjects.begin(), f.subjects.end());
  return plan;
}

nlohmann::json to_json(const FoldPlan& plan) {
  nlohmann::json folds = nlohmann::json::array();
  for (std::size_t k = 0; k < plan.folds.size(); ++k) {
    folds.push_back({{"fold", k}, {"subjects", plan.folds[k].subjects}, {"clip_count", plan.folds[k].clip_count}});
  }
  return {{"seed", plan.seed}, {"folds", folds}};
}

}  // namespace actrec::eval
