#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "actrec/eval/folds.hpp"
#include "actrec/eval/metrics.hpp"
#include "actrec/train/trainer.hpp"

namespace actrec::eval {

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> test_subjects;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  MetricsReport metrics;
  std::vector<train::ValidationPrediction> predictions;
  double train_time_s = 0.0;
};

struct CvReport {
  models::ModelConfig model_config;
  train::TrainConfig train_config;
  std::vector<FoldResult> per_fold;
  double mean_weighted_f1 = 0.0;
  double std_weighted_f1 = 0.0;  // sample standard deviation (n - 1)
  double wall_time_s = 0.0;
};

nlohmann::json to_json(const CvReport& report);

/// Called from worker threads as folds finish; must be thread-safe.
using FoldCallback = std::function<void(const FoldResult&)>;

/// Trains on all folds but one and evaluates on the held-out fold, for every
/// fold. Up to `jobs` folds run concurrently; results are independent of
/// `jobs`. Errors carry the fold index; the lowest failing fold is reported.
CvReport cross_validate(const models::ModelConfig& config, const train::TrainConfig& tconfig,
                        std::span<const train::LabeledClip> clips, std::span<const std::string> clip_subjects,
                        const FoldPlan& plan, int jobs = 1, const FoldCallback& on_fold = {});

/// Convenience overload that loads the manifest's feature files.
CvReport cross_validate(const models::ModelConfig& config, const train::TrainConfig& tconfig,
                        const data::Manifest& manifest, const FoldPlan& plan, int jobs = 1,
                        const FoldCallback& on_fold = {});

}  // namespace actrec::eval
