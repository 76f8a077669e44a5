#include "actrec/eval/cross_validate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "actrec/error.hpp"

namespace actrec::eval {

namespace {

/// Rethrows the active exception with a prefix, keeping its category.
[[noreturn]] void rethrow_with_prefix(const std::string& prefix) {
  try {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(prefix + e.detail(), e.offset());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const TrainingError& e) {
    throw TrainingError(prefix + e.what());
  } catch (const CheckpointError& e) {
    throw CheckpointError(prefix + e.what());
  } catch (const MetricsError& e) {
    throw MetricsError(prefix + e.what());
  } catch (const StreamError& e) {
    throw StreamError(prefix + e.what());
  }
}

FoldResult run_fold(const models::ModelConfig& config, const train::TrainConfig& tconfig,
                    std::span<const train::LabeledClip> clips, std::span<const std::string> clip_subjects,
                    const FoldPlan& plan, std::size_t k) {
  const std::unordered_set<std::string> held_out(plan.folds[k].subjects.begin(), plan.folds[k].subjects.end());
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    (held_out.count(clip_subjects[i]) ? test_idx : train_idx).push_back(i);
  }
  // Row order of the manifest must not matter: order both sets by clip id.
  const auto by_id = [&](std::size_t a, std::size_t b) { return clips[a].clip_id < clips[b].clip_id; };
  std::sort(train_idx.begin(), train_idx.end(), by_id);
  std::sort(test_idx.begin(), test_idx.end(), by_id);
  if (train_idx.empty() || test_idx.empty()) throw ConfigError("fold has an empty train or test set");

  std::vector<train::LabeledClip> train_set, test_set;
  for (std::size_t i : train_idx) train_set.push_back(clips[i]);
  for (std::size_t i : test_idx) test_set.push_back(clips[i]);

  const auto start = std::chrono::steady_clock::now();
  train::TrainResult trained = train::train(config, tconfig, train_set);
  FoldResult r;
  r.fold = k;
  r.test_subjects = plan.folds[k].subjects;
  r.n_train = train_set.size();
  r.n_test = test_set.size();
  r.train_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::vector<int> truth, pred;
  for (const train::LabeledClip& c : test_set) {
    models::Prediction p = models::forward_clip(config, trained.params, c.features);
    truth.push_back(c.label);
    pred.push_back(p.predicted_label);
    r.predictions.push_back({c.clip_id, c.label, std::move(p)});
  }
  r.metrics = weighted_f1(truth, pred, config.num_classes);
  return r;
}

}  // namespace

nlohmann::json to_json(const CvReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const FoldResult& f : report.per_fold) {
    const nlohmann::json m = to_json(f.metrics);
    folds.push_back({{"fold", f.fold},
                     {"test_subjects", f.test_subjects},
                     {"n_train", f.n_train},
                     {"n_test", f.n_test},
                     {"confusion", m["confusion"]},
                     {"per_class", m["per_class"]},
                     {"weighted_f1", f.metrics.weighted_f1},
                     {"accuracy", f.metrics.accuracy},
                     {"train_time_s", f.train_time_s}});
  }
  return {{"model_config", models::to_json(report.model_config)},
          {"train_config", train::to_json(report.train_config)},
          {"per_fold", folds},
          {"mean_weighted_f1", report.mean_weighted_f1},
          {"std_weighted_f1", report.std_weighted_f1},
          {"wall_time_s", report.wall_time_s}};
}

CvReport cross_validate(const models::ModelConfig& config, const train::TrainConfig& tconfig,
                        std::span<const train::LabeledClip> clips, std::span<const std::string> clip_subjects,
                        const FoldPlan& plan, int jobs, const FoldCallback& on_fold) {
  config.validate();
  tconfig.validate();
  if (plan.folds.empty()) throw ConfigError("fold plan is empty");
  if (clips.size() != clip_subjects.size()) throw ConfigError("one subject id is needed per clip");
  for (const std::string& s : clip_subjects) (void)plan.fold_of(s);

  const auto start = std::chrono::steady_clock::now();
  const std::size_t K = plan.folds.size();
  std::vector<FoldResult> results(K);
  std::vector<std::exception_ptr> errors(K);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < K; k = next++) {
      try {
        try {
          results[k] = run_fold(config, tconfig, clips, clip_subjects, plan, k);
        } catch (const Error&) {
          rethrow_with_prefix("fold " + std::to_string(k) + ": ");
        }
        if (on_fold) on_fold(results[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, K);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CvReport report;
  report.model_config = config;
  report.train_config = tconfig;
  report.per_fold = std::move(results);
  double sum = 0.0;
  for (const FoldResult& f : report.per_fold) sum += f.metrics.weighted_f1;
  report.mean_weighted_f1 = sum / static_cast<double>(K);
  double ss = 0.0;
  for (const FoldResult& f : report.per_fold) {
    const double d = f.metrics.weighted_f1 - report.mean_weighted_f1;
    ss += d * d;
  }
  report.std_weighted_f1 = K > 1 ? std::sqrt(ss / static_cast<double>(K - 1)) : 0.0;
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

CvReport cross_validate(const models::ModelConfig& config, const train::TrainConfig& tconfig,
                        const data::Manifest& manifest, const FoldPlan& plan, int jobs, const FoldCallback& on_fold) {
  const std::vector<train::LabeledClip> clips = train::load_clips(manifest);
  std::vector<std::string> subjects;
  for (const auto& r : manifest.records()) subjects.push_back(r.subject_id);
  return cross_validate(config, tconfig, clips, subjects, plan, jobs, on_fold);
}

}  // namespace actrec::eval
