#include "actrec/cli/run_config.hpp"

#include "actrec/data/atomic_file.hpp"
#include "actrec/error.hpp"

namespace actrec::cli {

namespace fs = std::filesystem;

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
  synth.seed = s;
}

namespace {

ExtractOptions extract_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("extract section must be a JSON object");
  ExtractOptions e;
  for (const auto& [key, value] : j.items()) {
    if (key == "grid") e.grid = value.get<std::size_t>();
    else if (key == "keyframes") e.keyframes = value.get<std::size_t>();
    else if (key == "crop_margin") e.crop_margin = value.get<double>();
    else if (key == "crop_size") e.crop_size = value.get<std::size_t>();
    else throw ConfigError("extract: unknown key '" + key + "'");
  }
  return e;
}

RunPaths paths_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("paths section must be a JSON object");
  RunPaths p;
  for (const auto& [key, value] : j.items()) {
    if (key == "manifest") p.manifest = value.get<std::string>();
    else if (key == "val_manifest") p.val_manifest = value.get<std::string>();
    else if (key == "checkpoint") p.checkpoint = value.get<std::string>();
    else if (key == "input") p.input = value.get<std::string>();
    else if (key == "frames_dir") p.frames_dir = value.get<std::string>();
    else throw ConfigError("paths: unknown key '" + key + "'");
  }
  return p;
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "model") {
        (void)models::model_config_from_json(value);  // rejects unknown keys early
        c.model = value;
      } else if (key == "train") {
        c.train = train::train_config_from_json(value);
      } else if (key == "stream") {
        c.stream = stream::stream_config_from_json(value);
      } else if (key == "synth") {
        c.synth = data::synth_spec_from_json(value);
      } else if (key == "extract") {
        c.extract = extract_from_json(value);
      } else if (key == "paths") {
        c.paths = paths_from_json(value);
      } else if (key == "folds") {
        c.folds = value.get<std::size_t>();
      } else if (key == "jobs") {
        c.jobs = value.get<int>();
      } else if (key != "seed") {
        throw ConfigError("run config: unknown key '" + key + "'");
      }
    }
    // The top-level seed overrides section seeds.
    if (j.contains("seed")) c.set_seed(j["seed"].get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(data::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": malformed JSON: " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"jobs", c.jobs},
          {"folds", c.folds},
          {"model", c.model},
          {"train", train::to_json(c.train)},
          {"stream", stream::to_json(c.stream)},
          {"synth", data::to_json(c.synth)},
          {"extract",
           {{"grid", c.extract.grid},
            {"keyframes", c.extract.keyframes},
            {"crop_margin", c.extract.crop_margin},
            {"crop_size", c.extract.crop_size}}},
          {"paths",
           {{"manifest", c.paths.manifest},
            {"val_manifest", c.paths.val_manifest},
            {"checkpoint", c.paths.checkpoint},
            {"input", c.paths.input},
            {"frames_dir", c.paths.frames_dir}}}};
}

models::ModelConfig resolve_model(const RunConfig& config, int input_dim) {
  nlohmann::json j = config.model;
  if (j.contains("input_dim") && j["input_dim"].get<int>() != input_dim) {
    throw ConfigError("model input_dim " + std::to_string(j["input_dim"].get<int>()) +
                      " does not match the data's feature dimension " + std::to_string(input_dim));
  }
  j["input_dim"] = input_dim;
  models::ModelConfig m = models::model_config_from_json(j);
  m.validate();
  return m;
}

void begin_run(const fs::path& dir) {
  if (fs::exists(dir / kRunCompleteMarker)) {
    throw ConfigError("run directory '" + dir.string() + "' already holds a completed run; choose another --out-dir");
  }
  fs::create_directories(dir);
}

void finish_run(const fs::path& dir) { data::write_file_atomic(dir / kRunCompleteMarker, "complete\n"); }

void echo_config(const fs::path& dir, const nlohmann::json& resolved) {
  data::write_file_atomic(dir / "resolved_config.json", resolved.dump(2) + "\n");
}

}  // namespace actrec::cli
