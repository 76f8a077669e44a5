#include "actrec/stream/engine.hpp"

#include "actrec/data/feature_io.hpp"
#include "actrec/error.hpp"

namespace actrec::stream {

std::string to_string(EmitPolicy policy) { return policy == EmitPolicy::every_hop ? "every_hop" : "on_change"; }

EmitPolicy parse_emit_policy(std::string_view text) {
  if (text == "every_hop") return EmitPolicy::every_hop;
  if (text == "on_change") return EmitPolicy::on_change;
  throw ConfigError("unknown emit policy '" + std::string(text) + "' (expected every_hop or on_change)");
}

void StreamConfig::validate() const {
  if (window < 1) throw ConfigError("stream window must be >= 1");
  if (hop < 1 || hop > window) {
    throw ConfigError("stream hop must be in [1, window], got " + std::to_string(hop) + " for window " +
                      std::to_string(window));
  }
}

nlohmann::json to_json(const StreamConfig& c) {
  return {{"window", c.window}, {"hop", c.hop}, {"emit_policy", to_string(c.emit_policy)}};
}

StreamConfig stream_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("stream config must be a JSON object");
  StreamConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "window") c.window = value.get<std::size_t>();
      else if (key == "hop") c.hop = value.get<std::size_t>();
      else if (key == "emit_policy") c.emit_policy = parse_emit_policy(value.get<std::string>());
      else throw ConfigError("stream config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("stream config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const WindowResult& r) {
  return {{"first_frame", r.first_frame},
          {"end_frame", r.end_frame},
          {"predicted_label", r.prediction.predicted_label},
          {"log_probs", r.prediction.log_probs},
          {"latency_ms", r.latency_ms}};
}

StreamEngine::StreamEngine(StreamConfig config, models::ModelConfig model, models::ModelParams params)
    : config_(config),
      model_(std::move(model)),
      params_(std::move(params)),
      window_((config.validate(), config.window), static_cast<std::size_t>(std::max(model_.input_dim, 1))) {
  model_.validate();
  models::check_params_match(model_, params_);
}

std::optional<WindowResult> StreamEngine::push(std::span<const float> frame, Clock::time_point arrival) {
  window_.push(frame);
  const std::size_t seen = window_.frames_seen();
  if (seen < config_.window || (seen - config_.window) % config_.hop != 0) return std::nullopt;

  WindowResult r;
  r.first_frame = window_.oldest_index();
  r.end_frame = seen;
  r.prediction = models::forward_clip(model_, params_, window_.snapshot());
  ++evaluated_;
  const bool changed = !last_label_ || *last_label_ != r.prediction.predicted_label;
  last_label_ = r.prediction.predicted_label;
  if (config_.emit_policy == EmitPolicy::on_change && !changed) return std::nullopt;
  r.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - arrival).count();
  return r;
}

AsyncStreamEngine::AsyncStreamEngine(StreamConfig config, models::ModelConfig model, models::ModelParams params,
                                     ResultCallback on_result)
    : engine_(config, std::move(model), std::move(params)),
      on_result_(std::move(on_result)),
      dim_(static_cast<std::size_t>(engine_.model_config().input_dim)),
      capacity_(config.window) {
  worker_ = std::thread([this] { run(); });
}

AsyncStreamEngine::~AsyncStreamEngine() {
  {
    std::lock_guard lock(mutex_);
    closing_ = true;
  }
  not_empty_.notify_all();
  not_full_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void AsyncStreamEngine::push(std::span<const float> frame) {
  if (frame.size() != dim_) {
    throw StreamError("frame has " + std::to_string(frame.size()) + " features, stream expects " + std::to_string(dim_));
  }
  const Clock::time_point arrival = Clock::now();
  std::unique_lock lock(mutex_);
  if (closing_) throw StreamError("push after finish()");
  not_full_.wait(lock, [&] { return queue_.size() < capacity_ || error_ || closing_; });
  if (error_) throw StreamError("stream worker failed; see finish() for the cause");
  queue_.emplace_back(std::vector<float>(frame.begin(), frame.end()), arrival);
  max_depth_ = std::max(max_depth_, queue_.size());
  lock.unlock();
  not_empty_.notify_one();
}

void AsyncStreamEngine::run() {
  for (;;) {
    std::pair<std::vector<float>, Clock::time_point> item;
    {
      std::unique_lock lock(mutex_);
      not_empty_.wait(lock, [&] { return !queue_.empty() || closing_; });
      if (queue_.empty()) return;  // closing and drained
      item = std::move(queue_.front());
      queue_.pop_front();
    }
    not_full_.notify_one();
    try {
      std::optional<WindowResult> r = engine_.push(item.first, item.second);
      if (r) {
        if (on_result_) on_result_(*r);
        std::lock_guard lock(mutex_);
        results_.push_back(std::move(*r));
      }
    } catch (...) {
      std::lock_guard lock(mutex_);
      error_ = std::current_exception();
      queue_.clear();
      not_full_.notify_all();
      return;
    }
  }
}

std::vector<WindowResult> AsyncStreamEngine::finish() {
  {
    std::lock_guard lock(mutex_);
    if (finished_) throw StreamError("finish() called twice");
    closing_ = true;
    finished_ = true;
  }
  not_empty_.notify_all();
  if (worker_.joinable()) worker_.join();
  if (error_) std::rethrow_exception(error_);
  return std::move(results_);
}

std::size_t AsyncStreamEngine::max_queue_depth() const {
  std::lock_guard lock(mutex_);
  return max_depth_;
}

StreamRun stream_sequence(StreamEngine& engine, const data::FeatureSequence& frames,
                          const std::function<void(const WindowResult&)>& on_result) {
  StreamRun run;
  const auto start = Clock::now();
  for (std::size_t t = 0; t < frames.frames; ++t) {
    if (auto r = engine.push(frames.row(t))) {
      if (on_result) on_result(*r);
      run.results.push_back(std::move(*r));
    }
  }
  run.frames = frames.frames;
  run.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (!run.results.empty()) {
    std::vector<double> latencies;
    for (const WindowResult& r : run.results) latencies.push_back(r.latency_ms);
    run.latency = compute_latency_stats(latencies, run.frames, run.wall_seconds);
  }
  return run;
}

StreamRun stream_file(StreamEngine& engine, const std::filesystem::path& path,
                      const std::function<void(const WindowResult&)>& on_result) {
  return stream_sequence(engine, data::read_features(path), on_result);
}

}  // namespace actrec::stream
