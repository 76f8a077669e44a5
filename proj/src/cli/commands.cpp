#include "actrec/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <map>
#include <mutex>

#include <CLI11.hpp>

#include "actrec/data/atomic_file.hpp"
#include "actrec/data/crop.hpp"
#include "actrec/data/feature_io.hpp"
#include "actrec/data/image.hpp"
#include "actrec/data/keyframes.hpp"
#include "actrec/data/toy_extract.hpp"
#include "actrec/error.hpp"
#include "actrec/eval/cross_validate.hpp"
#include "actrec/eval/folds.hpp"
#include "actrec/eval/metrics.hpp"
#include "actrec/train/checkpoint.hpp"

namespace actrec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const MetricsError*>(&e)) return kExitData;
  if (dynamic_cast<const TrainingError*>(&e) || dynamic_cast<const NumericError*>(&e)) return kExitTraining;
  if (dynamic_cast<const CheckpointError*>(&e)) return kExitCheckpoint;
  if (dynamic_cast<const StreamError*>(&e)) return kExitStream;
  return kExitOther;
}

namespace {

bool is_image(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  if (!fs::is_directory(dir)) throw DataError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (directories ? entry.is_directory() : (entry.is_regular_file() && is_image(entry.path()))) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_json(const fs::path& path, const json& j) { data::write_file_atomic(path, j.dump(2) + "\n"); }

fs::path require_out_dir(const std::string& out_dir, const char* command) {
  if (out_dir.empty()) throw ConfigError(std::string(command) + " needs --out-dir");
  return out_dir;
}

const std::string& require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required ") + flag);
  return value;
}

json predictions_json(const std::vector<train::ValidationPrediction>& preds) {
  json out = json::array();
  for (const auto& p : preds) {
    out.push_back({{"clip_id", p.clip_id},
                   {"label", p.label},
                   {"predicted_label", p.prediction.predicted_label},
                   {"log_probs", p.prediction.log_probs}});
  }
  return out;
}

std::optional<models::ModelKind> requested_kind(const RunConfig& c) {
  if (c.model.contains("kind")) return models::parse_model_kind(c.model["kind"].get<std::string>());
  return std::nullopt;
}

// ---- commands -----------------------------------------------------------

int cmd_synth(const RunConfig& c, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const fs::path dir = require_out_dir(out_dir, "synth");
  const fs::path manifest = data::write_synthetic_dataset(c.synth, dir);
  json resolved = to_json(c);
  echo_config(dir, resolved);
  err << "wrote " << c.synth.n_subjects * c.synth.clips_per_subject << " clips (" << c.synth.n_subjects
      << " subjects) to " << dir.string() << "\n";
  out << manifest.string() << "\n";
  return kExitOk;
}

int cmd_extract(const RunConfig& c, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const fs::path dir = require_out_dir(out_dir, "extract");
  const fs::path frames_dir = require_path(c.paths.frames_dir, "--frames-dir");
  std::vector<data::ClipRecord> records;
  std::size_t unlabeled = 0;
  for (const fs::path& clip_dir : sorted_entries(frames_dir, true)) {
    const std::string clip_id = clip_dir.filename().string();
    const data::FeatureSequence seq = extract_clip(clip_dir, c.extract);
    const std::string rel = "features/" + clip_id + ".fsq";
    data::write_features(dir / rel, seq);
    const fs::path meta_path = clip_dir / "clip.json";
    if (!fs::exists(meta_path)) {
      ++unlabeled;
      continue;
    }
    json meta;
    try {
      meta = json::parse(data::read_file(meta_path));
      data::ClipRecord r;
      r.clip_id = clip_id;
      r.subject_id = meta.at("subject_id").get<std::string>();
      r.label = data::parse_action(meta.at("label").get<std::string>());
      r.feature_path = rel;
      r.n_frames = seq.frames;
      r.source_note = "extracted from " + clip_dir.filename().string();
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(meta_path.string() + ": " + e.what());
    }
  }
  const fs::path manifest = dir / "manifest.jsonl";
  data::write_manifest(manifest, records);
  echo_config(dir, to_json(c));
  err << "extracted " << records.size() + unlabeled << " clips (" << unlabeled << " without clip.json, left out of the manifest)\n";
  out << manifest.string() << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& c, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const fs::path dir = require_out_dir(out_dir, "train");
  const data::Manifest manifest = data::read_manifest(require_path(c.paths.manifest, "--manifest"));
  const std::vector<train::LabeledClip> clips = train::load_clips(manifest);
  if (clips.empty()) throw ConfigError("training manifest is empty");
  const models::ModelConfig model = resolve_model(c, static_cast<int>(clips.front().features.dim));
  std::vector<train::LabeledClip> val;
  if (!c.paths.val_manifest.empty()) val = train::load_clips(data::read_manifest(c.paths.val_manifest));

  begin_run(dir);
  json resolved = to_json(c);
  resolved["model"] = models::to_json(model);
  echo_config(dir, resolved);
  const train::TrainResult result = train::train(model, c.train, clips, val, [&](const train::EpochRecord& e) {
    err << "epoch " << e.epoch << " loss " << e.mean_loss;
    if (e.val_weighted_f1) err << " val_weighted_f1 " << *e.val_weighted_f1;
    err << " (" << e.wall_time_s << " s)\n";
  });
  const fs::path ckpt = dir / "model.ackp";
  train::save_checkpoint(ckpt, model, result.params,
                         {{"seed", c.train.seed}, {"epochs", c.train.epochs}, {"n_train", clips.size()}});
  write_json(dir / "history.json", train::to_json(result.history));
  if (!val.empty()) write_json(dir / "validation_predictions.json", predictions_json(result.validation));
  finish_run(dir);
  out << json{{"checkpoint", ckpt.string()}, {"final_loss", result.history.epochs.back().mean_loss}}.dump() << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& c, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const train::Checkpoint ck = train::load_checkpoint(require_path(c.paths.checkpoint, "--checkpoint"), requested_kind(c));
  const data::Manifest manifest = data::read_manifest(require_path(c.paths.manifest, "--manifest"));
  const std::vector<train::LabeledClip> clips = train::load_clips(manifest);
  if (clips.empty()) throw ConfigError("evaluation manifest is empty");
  if (!out_dir.empty()) begin_run(out_dir);
  std::vector<train::ValidationPrediction> preds;
  std::vector<int> truth, predicted;
  for (const train::LabeledClip& clip : clips) {
    preds.push_back({clip.clip_id, clip.label, models::forward_clip(ck.config, ck.params, clip.features)});
    truth.push_back(clip.label);
    predicted.push_back(preds.back().prediction.predicted_label);
  }
  const eval::MetricsReport metrics = eval::weighted_f1(truth, predicted, ck.config.num_classes);
  json report = eval::to_json(metrics);
  if (!out_dir.empty()) {
    json resolved = to_json(c);
    resolved["model"] = models::to_json(ck.config);
    echo_config(out_dir, resolved);
    write_json(fs::path(out_dir) / "metrics.json", report);
    write_json(fs::path(out_dir) / "predictions.json", predictions_json(preds));
    finish_run(out_dir);
  }
  err << "weighted F1 " << metrics.weighted_f1 << " on " << clips.size() << " clips\n";
  out << report.dump() << "\n";
  return kExitOk;
}

int cmd_cv(const RunConfig& c, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const fs::path dir = require_out_dir(out_dir, "cv");
  const data::Manifest manifest = data::read_manifest(require_path(c.paths.manifest, "--manifest"));
  const eval::FoldPlan plan = eval::make_folds(manifest, c.folds, c.seed);
  const std::vector<train::LabeledClip> clips = train::load_clips(manifest);
  std::vector<std::string> subjects;
  for (const auto& r : manifest.records()) subjects.push_back(r.subject_id);
  const models::ModelConfig model = resolve_model(c, static_cast<int>(clips.front().features.dim));

  begin_run(dir);
  json resolved = to_json(c);
  resolved["model"] = models::to_json(model);
  echo_config(dir, resolved);
  write_json(dir / "folds.json", eval::to_json(plan));
  std::mutex err_mutex;
  const eval::CvReport report =
      eval::cross_validate(model, c.train, clips, subjects, plan, c.jobs, [&](const eval::FoldResult& f) {
        std::lock_guard lock(err_mutex);
        err << "fold " << f.fold << ": weighted F1 " << f.metrics.weighted_f1 << " (" << f.n_test << " test clips, "
            << f.train_time_s << " s)\n";
      });
  const json doc = eval::to_json(report);
  write_json(dir / "cv_report.json", doc);
  finish_run(dir);
  err << "mean weighted F1 " << report.mean_weighted_f1 << " +- " << report.std_weighted_f1 << "\n";
  out << doc.dump() << "\n";
  return kExitOk;
}

int cmd_stream(const RunConfig& c, const std::string& out_dir, std::istream& in, std::ostream& out,
               std::ostream& err) {
  train::Checkpoint ck = train::load_checkpoint(require_path(c.paths.checkpoint, "--checkpoint"), requested_kind(c));
  const std::string& input = require_path(c.paths.input, "--input");
  if (ck.config.kind == models::ModelKind::lstm) {
    err << "note: the bidirectional LSTM sees each whole window; its outputs are not frame-causal\n";
  }
  stream::StreamRun run;
  const auto emit = [&](const stream::WindowResult& r) { out << stream::to_json(r).dump() << "\n"; };
  if (input == "-") {
    // Producer: this thread parses stdin. Consumer: the engine's worker.
    const auto start = stream::Clock::now();
    stream::AsyncStreamEngine engine(c.stream, ck.config, std::move(ck.params), emit);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::vector<float> frame;
      try {
        frame = json::parse(line).get<std::vector<float>>();
      } catch (const json::exception& e) {
        throw StreamError("stdin line " + std::to_string(line_no) + ": expected a JSON array of numbers (" + e.what() + ")");
      }
      engine.push(frame);
      ++run.frames;
    }
    run.results = engine.finish();
    run.wall_seconds = std::chrono::duration<double>(stream::Clock::now() - start).count();
    if (!run.results.empty()) {
      std::vector<double> lat;
      for (const auto& r : run.results) lat.push_back(r.latency_ms);
      run.latency = stream::compute_latency_stats(lat, run.frames, run.wall_seconds);
    }
  } else {
    stream::StreamEngine engine(c.stream, ck.config, std::move(ck.params));
    run = stream::stream_file(engine, input, emit);
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    json resolved = to_json(c);
    resolved["model"] = models::to_json(ck.config);
    echo_config(out_dir, resolved);
  }
  if (!run.latency) {
    err << "note: " << run.frames << " frames is fewer than the window of " << c.stream.window
        << "; no windows were emitted\n";
    return kExitOk;
  }
  err << stream::latency_report(*run.latency);
  if (!out_dir.empty()) write_json(fs::path(out_dir) / "latency.json", stream::to_json(*run.latency));
  return kExitOk;
}

int cmd_report(const std::string& file, std::ostream& out) {
  json doc;
  try {
    doc = json::parse(data::read_file(file));
  } catch (const json::parse_error& e) {
    throw FormatError(file + ": malformed JSON: " + e.what(), e.byte);
  }
  char line[256];
  if (doc.is_object() && doc.contains("mean_weighted_f1")) {
    out << "cross-validation: " << doc["model_config"].value("kind", "?") << ", " << doc["per_fold"].size()
        << " folds\n";
    for (const auto& f : doc["per_fold"]) {
      std::snprintf(line, sizeof line, "  fold %d  weighted F1 %.4f  (%d test clips)\n", f["fold"].get<int>(),
                    f["weighted_f1"].get<double>(), f.value("n_test", 0));
      out << line;
    }
    std::snprintf(line, sizeof line, "mean weighted F1 %.4f +- %.4f  (%.1f s)\n", doc["mean_weighted_f1"].get<double>(),
                  doc["std_weighted_f1"].get<double>(), doc.value("wall_time_s", 0.0));
    out << line;
  } else if (doc.is_object() && doc.contains("p95_ms")) {
    out << stream::latency_report(stream::latency_from_json(doc));
  } else if (doc.is_object() && doc.contains("weighted_f1") && doc.contains("confusion")) {
    const eval::MetricsReport m = eval::metrics_from_json(doc);
    std::snprintf(line, sizeof line, "weighted F1 %.4f  accuracy %.4f\n", m.weighted_f1, m.accuracy);
    out << line;
    for (std::size_t i = 0; i < m.per_class.size(); ++i) {
      const auto& pc = m.per_class[i];
      const std::string name = i < data::kActionNames.size() ? std::string(data::kActionNames[i]) : std::to_string(i);
      std::snprintf(line, sizeof line, "  %-13s p %.3f  r %.3f  f1 %.3f  support %ld\n", name.c_str(), pc.precision,
                    pc.recall, pc.f1, pc.support);
      out << line;
    }
  } else if (doc.is_array() && !doc.empty() && doc[0].contains("mean_loss")) {
    out << doc.size() << " epochs\n";
    for (const auto& e : doc) {
      std::snprintf(line, sizeof line, "  epoch %4d  loss %.6f\n", e["epoch"].get<int>(), e["mean_loss"].get<double>());
      out << line;
    }
  } else {
    throw DataError(file + ": not a cv report, metrics report, latency summary or training history");
  }
  return kExitOk;
}

}  // namespace

data::FeatureSequence extract_clip(const fs::path& clip_dir, const ExtractOptions& options) {
  const std::vector<fs::path> files = sorted_entries(clip_dir, false);
  if (files.empty()) throw DataError("clip directory '" + clip_dir.string() + "' holds no .pgm/.ppm/.pnm images");
  std::vector<data::CropRecord> crops;
  if (fs::exists(clip_dir / "crops.json")) crops = data::read_crop_records(clip_dir / "crops.json");

  std::vector<data::Image> frames;
  for (std::size_t index : data::sample_keyframes(files.size(), options.keyframes)) {
    data::Image img = data::read_pnm(files[index]);
    if (!crops.empty()) {
      std::vector<data::CropRecord> here;
      for (const auto& r : crops) {
        if (static_cast<std::size_t>(r.frame_index) == index) here.push_back(r);
      }
      if (!here.empty()) {
        img = data::apply_crop(img, data::select_target_box(here), options.crop_margin, options.crop_size);
      } else {
        // No detection on this frame: keep the whole frame at the crop resolution.
        img = data::resize_bilinear(img, options.crop_size, options.crop_size);
      }
    }
    frames.push_back(std::move(img));
  }
  try {
    return data::toy_extract(frames, options.grid);
  } catch (const DataError& e) {
    throw DataError(clip_dir.string() + ": " + e.what());
  }
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal action recognition toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
  auto* o_seed = app.add_option("--seed", seed, "Seed for training, data generation and fold planning");
  app.add_option("--out-dir", out_dir, "Output directory");
  auto* o_jobs = app.add_option("--jobs", jobs, "Parallel cross-validation folds")->check(CLI::PositiveNumber);

  // Flags shared by several subcommands. Each is applied only when given.
  std::string manifest, val_manifest, checkpoint, input, frames_dir, model_kind, emit_policy, report_file;
  std::size_t n_subjects = 0, clips_per_subject = 0, frames = 0, dim = 0, folds = 0, window = 0, hop = 0, grid = 0,
              keyframes = 0, crop_size = 0;
  double noise_sigma = 0, subject_sigma = 0, lr = 0, crop_margin = 0;
  int epochs = 0, batch_size = 0;
  bool no_stage_supervision = false, no_shuffle = false;

  std::vector<std::function<void(RunConfig&)>> overrides;
  auto opt = [&](CLI::App* sub, const std::string& name, auto& target, const std::string& help,
                 std::function<void(RunConfig&)> apply) {
    CLI::Option* o = sub->add_option(name, target, help);
    overrides.push_back([o, apply](RunConfig& c) {
      if (o->count() > 0) apply(c);
    });
    return o;
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic feature dataset");
  opt(synth, "--n-subjects", n_subjects, "Subjects", [&](RunConfig& c) { c.synth.n_subjects = n_subjects; });
  opt(synth, "--clips-per-subject", clips_per_subject, "Clips per subject",
      [&](RunConfig& c) { c.synth.clips_per_subject = clips_per_subject; });
  opt(synth, "--frames", frames, "Frames per clip (T)", [&](RunConfig& c) { c.synth.frames = frames; });
  opt(synth, "--dim", dim, "Feature dimension (D)", [&](RunConfig& c) { c.synth.dim = dim; });
  opt(synth, "--noise-sigma", noise_sigma, "Per-value noise", [&](RunConfig& c) { c.synth.noise_sigma = noise_sigma; });
  opt(synth, "--subject-sigma", subject_sigma, "Per-subject offset scale",
      [&](RunConfig& c) { c.synth.subject_effect_sigma = subject_sigma; });

  auto* extract = app.add_subcommand("extract", "Extract toy features from image-sequence clips");
  opt(extract, "--frames-dir", frames_dir, "Directory of clip subdirectories",
      [&](RunConfig& c) { c.paths.frames_dir = frames_dir; });
  opt(extract, "--grid", grid, "Pooling grid size g (D = 2 g^2)", [&](RunConfig& c) { c.extract.grid = grid; });
  opt(extract, "--keyframes", keyframes, "Keyframes per clip", [&](RunConfig& c) { c.extract.keyframes = keyframes; });
  opt(extract, "--crop-margin", crop_margin, "Margin around detections",
      [&](RunConfig& c) { c.extract.crop_margin = crop_margin; });
  opt(extract, "--crop-size", crop_size, "Crop output side length",
      [&](RunConfig& c) { c.extract.crop_size = crop_size; });

  auto* train_cmd = app.add_subcommand("train", "Train one model and write a checkpoint");
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  auto* cv_cmd = app.add_subcommand("cv", "Subject-wise K-fold cross-validation");
  auto* stream_cmd = app.add_subcommand("stream", "Sliding-window inference over a frame stream");
  auto* report_cmd = app.add_subcommand("report", "Summarize a JSON report");
  report_cmd->add_option("file", report_file, "cv_report.json, metrics.json, latency.json or history.json")->required();

  for (CLI::App* sub : {train_cmd, eval_cmd, cv_cmd}) {
    opt(sub, "--manifest", manifest, "Clip manifest", [&](RunConfig& c) { c.paths.manifest = manifest; });
  }
  for (CLI::App* sub : {train_cmd, eval_cmd, cv_cmd, stream_cmd}) {
    opt(sub, "--model", model_kind, "lstm, tcn, mstcn or mstcn_pp",
        [&](RunConfig& c) { c.model["kind"] = models::to_string(models::parse_model_kind(model_kind)); });
  }
  for (CLI::App* sub : {eval_cmd, stream_cmd}) {
    opt(sub, "--checkpoint", checkpoint, "Checkpoint file", [&](RunConfig& c) { c.paths.checkpoint = checkpoint; });
  }
  for (CLI::App* sub : {train_cmd, cv_cmd}) {
    opt(sub, "--epochs", epochs, "Training epochs", [&](RunConfig& c) { c.train.epochs = epochs; });
    opt(sub, "--batch-size", batch_size, "Minibatch size", [&](RunConfig& c) { c.train.batch_size = batch_size; });
    opt(sub, "--lr", lr, "Adam learning rate", [&](RunConfig& c) { c.train.learning_rate = lr; });
    auto* f1 = sub->add_flag("--no-stage-supervision", no_stage_supervision, "Final-head loss only");
    overrides.push_back([f1, &no_stage_supervision](RunConfig& c) {
      if (f1->count() > 0) c.train.stage_supervision = !no_stage_supervision;
    });
    auto* f2 = sub->add_flag("--no-shuffle", no_shuffle, "Keep manifest order");
    overrides.push_back([f2, &no_shuffle](RunConfig& c) {
      if (f2->count() > 0) c.train.shuffle = !no_shuffle;
    });
  }
  opt(train_cmd, "--val-manifest", val_manifest, "Validation manifest",
      [&](RunConfig& c) { c.paths.val_manifest = val_manifest; });
  opt(cv_cmd, "--k,--folds", folds, "Number of folds", [&](RunConfig& c) { c.folds = folds; });
  opt(stream_cmd, "--input", input, "Feature file, or - for JSON arrays on stdin",
      [&](RunConfig& c) { c.paths.input = input; });
  opt(stream_cmd, "--window", window, "Window size W", [&](RunConfig& c) { c.stream.window = window; });
  opt(stream_cmd, "--hop", hop, "Hop H", [&](RunConfig& c) { c.stream.hop = hop; });
  opt(stream_cmd, "--emit-policy", emit_policy, "every_hop or on_change",
      [&](RunConfig& c) { c.stream.emit_policy = stream::parse_emit_policy(emit_policy); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    RunConfig config = o_config->count() ? load_run_config(config_path) : RunConfig{};
    for (const auto& apply : overrides) apply(config);
    if (o_seed->count()) config.set_seed(seed);
    if (o_jobs->count()) config.jobs = jobs;
    config.train.validate();
    config.stream.validate();
    config.synth.validate();

    if (synth->parsed()) return cmd_synth(config, out_dir, out, err);
    if (extract->parsed()) return cmd_extract(config, out_dir, out, err);
    if (train_cmd->parsed()) return cmd_train(config, out_dir, out, err);
    if (eval_cmd->parsed()) return cmd_eval(config, out_dir, out, err);
    if (cv_cmd->parsed()) return cmd_cv(config, out_dir, out, err);
    if (stream_cmd->parsed()) return cmd_stream(config, out_dir, in, out, err);
    return cmd_report(report_file, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace actrec::cli
