#include "actrec/stream/latency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "actrec/error.hpp"

namespace actrec::stream {

double nearest_rank(std::span<const double> values, double p) {
  if (values.empty()) throw StreamError("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw StreamError("percentile must be in (0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // p * n first: exact for integral inputs, so 95% of 100 is rank 95, not 96.
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n / 100.0)));
  return sorted[std::min(rank, sorted.size()) - 1];
}

LatencyStats compute_latency_stats(std::span<const double> latencies_ms, std::size_t frames, double wall_seconds) {
  if (latencies_ms.empty()) throw StreamError("no windows were emitted, so there is no latency to report");
  LatencyStats s;
  s.count = latencies_ms.size();
  s.mean_ms = std::accumulate(latencies_ms.begin(), latencies_ms.end(), 0.0) / static_cast<double>(s.count);
  s.p50_ms = nearest_rank(latencies_ms, 50.0);
  s.p95_ms = nearest_rank(latencies_ms, 95.0);
  s.max_ms = *std::max_element(latencies_ms.begin(), latencies_ms.end());
  s.throughput_fps = wall_seconds > 0.0 ? static_cast<double>(frames) / wall_seconds : 0.0;
  return s;
}

std::string latency_report(const LatencyStats& s) {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "windows        %zu\nmean latency   %.3f ms\np50 latency    %.3f ms\np95 latency    %.3f ms\n"
                "max latency    %.3f ms\nthroughput     %.3f frames/s\n",
                s.count, s.mean_ms, s.p50_ms, s.p95_ms, s.max_ms, s.throughput_fps);
  return buf;
}

nlohmann::json to_json(const LatencyStats& s) {
  return {{"count", s.count},   {"mean_ms", s.mean_ms}, {"p50_ms", s.p50_ms},
          {"p95_ms", s.p95_ms}, {"max_ms", s.max_ms},   {"throughput_fps", s.throughput_fps}};
}

LatencyStats latency_from_json(const nlohmann::json& j) {
  try {
    LatencyStats s;
    s.count = j.at("count").get<std::size_t>();
    s.mean_ms = j.at("mean_ms").get<double>();
    s.p50_ms = j.at("p50_ms").get<double>();
    s.p95_ms = j.at("p95_ms").get<double>();
    s.max_ms = j.at("max_ms").get<double>();
    s.throughput_fps = j.at("throughput_fps").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw StreamError(std::string("malformed latency summary: ") + e.what());
  }
}

}  // namespace actrec::stream
