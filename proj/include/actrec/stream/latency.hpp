#pragma once

#include <span>
#include <string>

#include <json.hpp>

namespace actrec::stream {

struct LatencyStats {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
  double throughput_fps = 0.0;  // frames ingested per second of wall time

  bool operator==(const LatencyStats&) const = default;
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
/// Throws StreamError on an empty sample or p outside (0, 100].
double nearest_rank(std::span<const double> values, double p);

/// Throws StreamError when there are no latencies.
LatencyStats compute_latency_stats(std::span<const double> latencies_ms, std::size_t frames, double wall_seconds);

/// One line per field, fixed 3-decimal formatting.
std::string latency_report(const LatencyStats& stats);
nlohmann::json to_json(const LatencyStats& stats);
/// Throws StreamError on missing or mistyped fields.
LatencyStats latency_from_json(const nlohmann::json& j);

}  // namespace actrec::stream
