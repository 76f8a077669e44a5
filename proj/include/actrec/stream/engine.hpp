#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "actrec/models/model.hpp"
#include "actrec/stream/latency.hpp"
#include "actrec/stream/sliding_window.hpp"

namespace actrec::stream {

enum class EmitPolicy { every_hop, on_change };

std::string to_string(EmitPolicy policy);
EmitPolicy parse_emit_policy(std::string_view text);

struct StreamConfig {
  std::size_t window = 50;
  std::size_t hop = 1;
  EmitPolicy emit_policy = EmitPolicy::every_hop;

  /// Throws ConfigError unless 1 <= hop <= window.
  void validate() const;
  bool operator==(const StreamConfig&) const = default;
};

nlohmann::json to_json(const StreamConfig& config);
StreamConfig stream_config_from_json(const nlohmann::json& j);

using Clock = std::chrono::steady_clock;

struct WindowResult {
  std::size_t first_frame = 0;  // index of the oldest frame in the window
  std::size_t end_frame = 0;    // one past the newest frame
  models::Prediction prediction;
  double latency_ms = 0.0;      // newest frame's arrival to emission
};

nlohmann::json to_json(const WindowResult& result);

/// Synchronous FIFO engine: inference runs inside push(). The window is
/// classified with forward_clip, so results equal batch evaluation of the
/// same frames exactly. Bidirectional LSTM checkpoints are accepted because
/// each window is complete before inference, but they are not frame-causal.
class StreamEngine {
 public:
  /// Throws ConfigError on an invalid stream or model config.
  StreamEngine(StreamConfig config, models::ModelConfig model, models::ModelParams params);

  /// Throws StreamError on a dimension mismatch.
  std::optional<WindowResult> push(std::span<const float> frame, Clock::time_point arrival = Clock::now());

  const StreamConfig& config() const noexcept { return config_; }
  const models::ModelConfig& model_config() const noexcept { return model_; }
  std::size_t frames_seen() const noexcept { return window_.frames_seen(); }
  /// Windows classified so far, including ones suppressed by on_change.
  std::size_t windows_evaluated() const noexcept { return evaluated_; }

 private:
  StreamConfig config_;
  models::ModelConfig model_;
  models::ModelParams params_;
  SlidingWindow window_;
  std::size_t evaluated_ = 0;
  std::optional<int> last_label_;
};

/// Producer/consumer engine: push() enqueues and returns, a worker thread
/// runs inference. When the queue already holds a full window of unprocessed
/// frames, push() blocks until the worker catches up; frames are never dropped.
class AsyncStreamEngine {
 public:
  using ResultCallback = std::function<void(const WindowResult&)>;

  /// `on_result`, if set, is called on the worker thread in emission order.
  AsyncStreamEngine(StreamConfig config, models::ModelConfig model, models::ModelParams params,
                    ResultCallback on_result = {});
  ~AsyncStreamEngine();

  AsyncStreamEngine(const AsyncStreamEngine&) = delete;
  AsyncStreamEngine& operator=(const AsyncStreamEngine&) = delete;

  /// Throws StreamError on a dimension mismatch or after a worker failure.
  void push(std::span<const float> frame);

  /// Waits for all queued frames, stops the worker and returns every result.
  /// Rethrows a worker failure.
  std::vector<WindowResult> finish();

  std::size_t queue_capacity() const noexcept { return capacity_; }
  /// Largest queue depth observed, for backpressure checks.
  std::size_t max_queue_depth() const;

 private:
  void run();

  StreamEngine engine_;
  ResultCallback on_result_;
  std::size_t dim_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<std::pair<std::vector<float>, Clock::time_point>> queue_;
  std::vector<WindowResult> results_;
  std::size_t max_depth_ = 0;
  bool closing_ = false;
  bool finished_ = false;
  std::exception_ptr error_;
  std::thread worker_;
};

struct StreamRun {
  std::vector<WindowResult> results;
  std::size_t frames = 0;
  double wall_seconds = 0.0;
  /// Empty when no window was emitted.
  std::optional<LatencyStats> latency;
};

/// Replays frames through a synchronous engine as fast as possible.
StreamRun stream_sequence(StreamEngine& engine, const data::FeatureSequence& frames,
                          const std::function<void(const WindowResult&)>& on_result = {});

/// Reads a feature file and replays it.
StreamRun stream_file(StreamEngine& engine, const std::filesystem::path& path,
                      const std::function<void(const WindowResult&)>& on_result = {});

}  // namespace actrec::stream
