// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
// ACTREC_ACCEPTANCE_EPOCHS overrides the cross-validation epoch budget and
// ACTREC_ACCEPTANCE_JOBS the number of concurrent folds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "actrec/data/synthetic.hpp"
#include "actrec/eval/cross_validate.hpp"
#include "actrec/eval/folds.hpp"
#include "actrec/eval/metrics.hpp"
#include "actrec/models/model.hpp"
#include "actrec/stream/engine.hpp"
#include "actrec/train/checkpoint.hpp"
#include "actrec/train/trainer.hpp"
#include "model_oracles.hpp"
#include "op_cases.hpp"
#include "oracles.hpp"

using namespace actrec;
using models::ModelConfig;
using models::ModelKind;
using Clock = std::chrono::steady_clock;

namespace {

constexpr ModelKind kAllKinds[] = {ModelKind::lstm, ModelKind::tcn, ModelKind::mstcn, ModelKind::mstcn_pp};

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::atoi(v) : fallback;
}

data::FeatureSequence random_sequence(std::size_t T, std::size_t D, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  data::FeatureSequence f(T, D);
  for (float& v : f.values) v = n(rng);
  return f;
}

// ---- 1 ----------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto start = Clock::now();
  Outcome o;
  double worst = 0.0;
  std::string worst_name;
  const auto p = oracle::op_params(21);
  const auto lp = oracle::lstm_params(22);
  for (const auto& c : oracle::op_cases()) {
    auto params = c.recurrent ? lp : p;
    const auto r = num::grad_check(c.build, params, 1e-3, 3);
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = c.name;
    }
  }
  for (ModelKind kind : kAllKinds) {
    ModelConfig c = oracle::narrow_config(kind, 8);
    c.num_classes = 3;
    const auto r = oracle::grad_check_model(c, 12, 17);
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = std::string(models::to_string(kind)) + " " + r.worst_parameter;
    }
  }
  const double elapsed = seconds_since(start);
  o.pass = worst < 1e-4 && elapsed < 120.0;
  o.detail = "max relative error " + fmt("%.3g", worst) + " (" + worst_name + "), " + fmt("%.1f", elapsed) +
             " s; need < 1e-4 and < 120 s";
  return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome receptive_field() {
  Outcome o;
  const std::map<ModelKind, long> expected{{ModelKind::tcn, 125}, {ModelKind::mstcn, 621}};
  for (const auto& [kind, rf] : expected) {
    const ModelConfig c = ModelConfig::for_kind(kind, 4);
    const long closed = models::receptive_field(c);
    const long measured = oracle::sensitivity_receptive_field(c, static_cast<std::size_t>(rf + 20));
    o.pass = o.pass && closed == rf && measured == rf;
    o.detail += std::string(models::to_string(kind)) + " closed form " + std::to_string(closed) + ", propagated " +
                std::to_string(measured) + " (expected " + std::to_string(rf) + "); ";
  }
  o.detail.resize(o.detail.size() - 2);
  return o;
}

// ---- 3 ----------------------------------------------------------------------

Outcome causality() {
  Outcome o;
  std::mt19937_64 rng(303);
  const ModelKind causal_kinds[] = {ModelKind::tcn, ModelKind::mstcn, ModelKind::mstcn_pp};
  std::size_t violations = 0, compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const ModelKind kind = causal_kinds[trial % 3];
    ModelConfig c = ModelConfig::for_kind(kind, 6);
    c.hidden_channels = 16;
    const auto params = models::build_model(c, rng());
    const std::size_t T = 8 + rng() % 40;
    const std::size_t p = 1 + rng() % (T - 1);
    auto x = oracle::random_tensor<float>({T, 6}, rng);
    const auto before = models::frame_features(c, params, x);
    std::normal_distribution<float> n(0.0f, 3.0f);
    for (std::size_t t = p; t < T; ++t) {
      if (rng() % 2 == 0 || t == p) {
        for (std::size_t d = 0; d < 6; ++d) x[t * 6 + d] += n(rng);
      }
    }
    const auto after = models::frame_features(c, params, x);
    const std::size_t F = before.dim(1);
    for (std::size_t i = 0; i < p * F; ++i) {
      ++compared;
      violations += before[i] != after[i];
    }
  }
  o.pass = violations == 0;
  o.detail = "100 trials, " + std::to_string(compared) + " earlier activations compared, " +
             std::to_string(violations) + " differ";
  return o;
}

// ---- 4 ----------------------------------------------------------------------

Outcome metric_oracle() {
  Outcome o;
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int C = 2 + static_cast<int>(rng() % 5);
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<int>(rng() % static_cast<unsigned>(C));
      p[i] = rng() % 3 == 0 ? t[i] : static_cast<int>(rng() % static_cast<unsigned>(C));
    }
    worst = std::max(worst, std::abs(eval::weighted_f1(t, p, C).weighted_f1 - oracle::weighted_f1(t, p, C).weighted));
  }
  const double a = eval::weighted_f1(std::vector<int>{0, 0, 1, 2}, std::vector<int>{0, 1, 1, 2}, 3).weighted_f1;
  const double b =
      eval::weighted_f1(std::vector<int>{0, 1, 2, 0, 1, 2}, std::vector<int>(6, 1), 3).weighted_f1;
  o.pass = worst <= 1e-12 && std::abs(a - 0.75) <= 1e-12 && std::abs(b - 1.0 / 6.0) <= 1e-12;
  o.detail = "200 random cases, max deviation " + fmt("%.3g", worst) + "; worked examples " + fmt("%.15f", a) +
             " and " + fmt("%.15f", b);
  return o;
}

// ---- 5 ----------------------------------------------------------------------

Outcome fold_integrity() {
  Outcome o;
  std::mt19937_64 rng(505);
  int bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t K = 2 + rng() % 6;
    const std::size_t n_subjects = K + rng() % 25;
    std::vector<data::ClipRecord> rows;
    for (std::size_t s = 0; s < n_subjects; ++s) {
      const int count = 1 + static_cast<int>(rng() % 10);
      for (int i = 0; i < count; ++i) {
        const std::string id = "s" + std::to_string(s) + "_" + std::to_string(i);
        rows.push_back({id, "subject" + std::to_string(s), data::label_from_id(static_cast<int>(rng() % 3)),
                        "f/" + id + ".fsq", 20, std::nullopt});
      }
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    const data::Manifest m(rows);
    const std::uint64_t seed = rng();
    const eval::FoldPlan plan = eval::make_folds(m, K, seed);
    bool ok = plan.folds.size() == K;
    std::set<std::string> seen;
    std::size_t clips = 0;
    for (std::size_t k = 0; ok && k < K; ++k) {
      for (const auto& s : plan.folds[k].subjects) ok = ok && seen.insert(s).second;
      const auto test = plan.test_set(m, k);
      const auto train = plan.train_set(m, k);
      std::set<std::string> test_subjects;
      for (const auto& r : test.records()) test_subjects.insert(r.subject_id);
      for (const auto& r : train.records()) ok = ok && !test_subjects.contains(r.subject_id);
      ok = ok && test.size() + train.size() == m.size();
      clips += test.size();
    }
    ok = ok && seen.size() == n_subjects && clips == m.size();
    ok = ok && eval::make_folds(m, K, seed) == plan;
    bad += !ok;
  }
  o.pass = bad == 0;
  o.detail = "500 random manifests, " + std::to_string(bad) + " violations";
  return o;
}

// ---- 6 and 7 ------------------------------------------------------------------

struct CvSummary {
  std::map<ModelKind, double> mean_f1;
  std::map<ModelKind, std::vector<double>> fold_seconds;
  std::map<ModelKind, double> kind_seconds;
  double centroid_accuracy = 0.0;
  double wall_s = 0.0;
  int epochs = 0;
  int jobs = 1;
};

CvSummary run_cross_validation() {
  CvSummary s;
  data::SynthSpec spec;
  spec.n_subjects = 30;
  spec.clips_per_subject = 6;
  spec.frames = 20;
  spec.dim = 64;
  spec.noise_sigma = 0.3;
  spec.subject_effect_sigma = 0.2;
  spec.seed = 1;
  const auto synth = data::generate_clips(spec);
  std::vector<data::ClipRecord> records;
  std::vector<train::LabeledClip> clips;
  std::vector<std::string> subjects;
  for (const auto& c : synth) {
    records.push_back(c.record);
    clips.push_back({c.record.clip_id, static_cast<int>(c.record.label), c.features});
    subjects.push_back(c.record.subject_id);
  }
  const data::Manifest manifest(records);
  const eval::FoldPlan plan = eval::make_folds(manifest, 5, 0);

  // Separability check with the same subject-wise folds.
  std::size_t correct_weighted = 0;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    std::vector<std::vector<float>> tr, te;
    std::vector<int> try_, tey;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      const bool test = plan.fold_of(subjects[i]) == k;
      (test ? te : tr).push_back(clips[i].features.values);
      (test ? tey : try_).push_back(clips[i].label);
    }
    const double acc = oracle::nearest_centroid_accuracy(tr, try_, te, tey, 3);
    correct_weighted += static_cast<std::size_t>(std::lround(acc * static_cast<double>(te.size())));
  }
  s.centroid_accuracy = static_cast<double>(correct_weighted) / static_cast<double>(clips.size());

  train::TrainConfig tc;
  s.epochs = env_int("ACTREC_ACCEPTANCE_EPOCHS", 50);
  tc.epochs = s.epochs;
  tc.seed = 1;
  s.jobs = env_int("ACTREC_ACCEPTANCE_JOBS", static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  const auto start = Clock::now();
  for (ModelKind kind : kAllKinds) {
    const auto t0 = Clock::now();
    const ModelConfig c = ModelConfig::for_kind(kind, 64);
    const eval::CvReport r = eval::cross_validate(c, tc, clips, subjects, plan, s.jobs);
    s.mean_f1[kind] = r.mean_weighted_f1;
    for (const auto& f : r.per_fold) s.fold_seconds[kind].push_back(f.train_time_s);
    s.kind_seconds[kind] = seconds_since(t0);
    std::fprintf(stderr, "  cv %-8s mean weighted F1 %.4f +- %.4f (%.0f s)\n", models::to_string(kind).data(),
                 r.mean_weighted_f1, r.std_weighted_f1, seconds_since(t0));
  }
  s.wall_s = seconds_since(start);
  return s;
}

// Wall time of running each kind's measured folds on `workers` parallel
// workers (longest fold first onto the least loaded worker), kinds in sequence.
// Everything outside fold training (evaluation, setup) is kept serial.
double scheduled_seconds(const CvSummary& s, int workers) {
  double total = 0.0;
  for (const auto& [kind, times] : s.fold_seconds) {
    std::vector<double> sorted = times, load(static_cast<std::size_t>(workers), 0.0);
    std::sort(sorted.rbegin(), sorted.rend());
    for (double t : sorted) *std::min_element(load.begin(), load.end()) += t;
    double serial = s.kind_seconds.at(kind);
    for (double t : times) serial -= t;
    total += *std::max_element(load.begin(), load.end()) + std::max(0.0, serial);
  }
  return total;
}

Outcome synthetic_end_to_end(const CvSummary& s) {
  Outcome o;
  const std::map<ModelKind, double> need{
      {ModelKind::mstcn, 0.90}, {ModelKind::tcn, 0.85}, {ModelKind::lstm, 0.80}, {ModelKind::mstcn_pp, 0.90}};
  o.detail = "nearest-centroid accuracy " + fmt("%.4f", s.centroid_accuracy) + " (need >= 0.95); ";
  o.pass = s.centroid_accuracy >= 0.95;
  for (const auto& [kind, threshold] : need) {
    const double f1 = s.mean_f1.at(kind);
    o.pass = o.pass && f1 >= threshold;
    o.detail += std::string(models::to_string(kind)) + " " + fmt("%.4f", f1) + " (>= " + fmt("%.2f", threshold) + "), ";
  }
  // The time bound is stated for four cores. With fewer, the measured fold
  // times are scheduled onto four workers instead.
  const bool four_cores = std::thread::hardware_concurrency() >= 4 && s.jobs >= 4;
  const double runtime = four_cores ? s.wall_s : scheduled_seconds(s, 4);
  o.pass = o.pass && runtime < 1200.0;
  o.detail += std::to_string(s.epochs) + " epochs, " + fmt("%.0f", s.wall_s) + " s measured with " +
              std::to_string(s.jobs) + " concurrent folds";
  if (!four_cores) o.detail += ", " + fmt("%.0f", runtime) + " s scheduled on 4 workers";
  o.detail += " (need < 1200 s on 4 cores)";
  return o;
}

Outcome model_ordering(const CvSummary& s) {
  Outcome o;
  const double lstm = s.mean_f1.at(ModelKind::lstm), tcn = s.mean_f1.at(ModelKind::tcn);
  const double ms = s.mean_f1.at(ModelKind::mstcn), pp = s.mean_f1.at(ModelKind::mstcn_pp);
  o.pass = ms >= tcn - 0.02 && tcn >= lstm - 0.02 && ms >= lstm - 0.02 && pp >= lstm - 0.02;
  o.detail = "mstcn " + fmt("%.4f", ms) + " vs tcn " + fmt("%.4f", tcn) + "; tcn/mstcn/mstcn_pp " + fmt("%.4f", tcn) +
             "/" + fmt("%.4f", ms) + "/" + fmt("%.4f", pp) + " vs lstm " + fmt("%.4f", lstm) + " (band 0.02)";
  return o;
}

// ---- 8 ----------------------------------------------------------------------

Outcome streaming_equivalence() {
  Outcome o;
  data::SynthSpec spec;
  spec.n_subjects = 10;
  spec.clips_per_subject = 1;
  spec.seed = 8;
  data::FeatureSequence frames(0, spec.dim);
  for (const auto& c : data::generate_clips(spec)) {
    frames.values.insert(frames.values.end(), c.features.values.begin(), c.features.values.end());
    frames.frames += c.features.frames;
  }
  const ModelConfig c = ModelConfig::for_kind(ModelKind::mstcn, static_cast<int>(spec.dim));
  const auto params = models::build_model(c, 8);
  stream::StreamConfig sc;
  sc.window = 50;
  sc.hop = 1;
  stream::StreamEngine engine(sc, c, params);
  const auto run = stream::stream_sequence(engine, frames);
  std::size_t mismatched = 0;
  for (const auto& r : run.results) {
    mismatched += !(r.prediction == models::forward_clip(c, params, frames.slice(r.first_frame, 50)));
  }
  o.pass = frames.frames == 200 && run.results.size() == 151 && mismatched == 0;
  o.detail = std::to_string(frames.frames) + " frames, " + std::to_string(run.results.size()) +
             " windows emitted (expected 151), " + std::to_string(mismatched) + " differ from forward_clip";
  return o;
}

// ---- 9 ----------------------------------------------------------------------

Outcome latency() {
  Outcome o;
  const ModelConfig c = ModelConfig::for_kind(ModelKind::mstcn, 256);
  const auto params = models::build_model(c, 9);
  stream::StreamConfig sc;
  sc.window = 50;
  stream::StreamEngine engine(sc, c, params);
  std::mt19937_64 rng(9);
  const auto run = stream::stream_sequence(engine, random_sequence(150, 256, rng));
  if (!run.latency) {
    o.pass = false;
    o.detail = "no windows emitted";
    return o;
  }
  const auto& l = *run.latency;
  o.pass = l.count == 101 && l.mean_ms < 200.0;
  o.detail = std::to_string(l.count) + " windows, mean " + fmt("%.2f", l.mean_ms) + " ms, p50 " +
             fmt("%.2f", l.p50_ms) + " ms, p95 " + fmt("%.2f", l.p95_ms) + " ms, max " + fmt("%.2f", l.max_ms) +
             " ms (need mean < 200 ms)";
  return o;
}

// ---- 10 ---------------------------------------------------------------------

Outcome checkpoint_round_trip() {
  Outcome o;
  std::mt19937_64 rng(10);
  std::size_t compared = 0, differ = 0;
  for (ModelKind kind : kAllKinds) {
    const ModelConfig c = ModelConfig::for_kind(kind, 16);
    const auto params = models::build_model(c, 10);
    oracle::TempDir dir("acceptance_ckpt");
    train::save_checkpoint(dir / "m.ackp", c, params);
    const train::Checkpoint back = train::load_checkpoint(dir / "m.ackp", kind);
    for (int i = 0; i < 10; ++i) {
      const auto clip = random_sequence(5 + rng() % 30, 16, rng);
      const auto a = models::forward_clip(c, params, clip);
      const auto b = models::forward_clip(back.config, back.params, clip);
      ++compared;
      differ += a.log_probs.size() != b.log_probs.size() ||
                std::memcmp(a.log_probs.data(), b.log_probs.data(), a.log_probs.size() * sizeof(float)) != 0;
    }
  }
  o.pass = differ == 0;
  o.detail = std::to_string(compared) + " clips over 4 kinds, " + std::to_string(differ) + " differ";
  return o;
}

// ---- 11 ---------------------------------------------------------------------

Outcome overfit() {
  Outcome o;
  data::SynthSpec spec;
  spec.n_subjects = 2;
  spec.clips_per_subject = 3;
  spec.seed = 11;
  std::vector<train::LabeledClip> clips;
  for (const auto& c : data::generate_clips(spec)) {
    clips.push_back({c.record.clip_id, static_cast<int>(c.record.label), c.features});
  }
  train::TrainConfig tc;
  tc.epochs = 200;
  tc.seed = 11;
  for (ModelKind kind : kAllKinds) {
    const auto t0 = Clock::now();
    const ModelConfig c = ModelConfig::for_kind(kind, static_cast<int>(spec.dim));
    const auto result = train::train(c, tc, clips);
    std::vector<int> truth, pred;
    for (const auto& clip : clips) {
      truth.push_back(clip.label);
      pred.push_back(models::forward_clip(c, result.params, clip.features).predicted_label);
    }
    const double f1 = eval::weighted_f1(truth, pred, 3).weighted_f1;
    const double loss = result.history.epochs.back().mean_loss;
    o.pass = o.pass && f1 == 1.0 && loss < 0.01;
    o.detail += std::string(models::to_string(kind)) + " F1 " + fmt("%.3f", f1) + " loss " + fmt("%.2e", loss) + ", ";
    std::fprintf(stderr, "  overfit %-8s %.0f s\n", models::to_string(kind).data(), seconds_since(t0));
  }
  o.detail += "need F1 1.0 and loss < 0.01";
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* title, const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    failures += !o.pass;
    std::printf("%s criterion %d: %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", n, title, o.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
  };

  report(1, "gradient fidelity", gradient_fidelity);
  report(2, "receptive field", receptive_field);
  report(3, "causality", causality);
  report(4, "metric oracle", metric_oracle);
  report(5, "fold integrity", fold_integrity);
  CvSummary cv;
  std::string cv_error;
  try {
    cv = run_cross_validation();
  } catch (const std::exception& e) {
    cv_error = e.what();
  }
  auto cv_check = [&](Outcome (*f)(const CvSummary&)) {
    return [&, f] {
      if (!cv_error.empty()) throw std::runtime_error(cv_error);
      return f(cv);
    };
  };
  report(6, "synthetic end-to-end", cv_check(synthetic_end_to_end));
  report(7, "model ordering", cv_check(model_ordering));
  report(8, "streaming equivalence", streaming_equivalence);
  report(9, "latency", latency);
  report(10, "checkpoint round trip", checkpoint_round_trip);
  report(11, "overfit sanity", overfit);
  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
