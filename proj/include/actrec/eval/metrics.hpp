#pragma once

#include <span>
#include <vector>

#include <json.hpp>

namespace actrec::eval {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double weight = 0.0;  // support / total
  long support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

struct MetricsReport {
  int num_classes = 0;
  std::vector<std::vector<long>> confusion;  // [truth][prediction]
  std::vector<ClassMetrics> per_class;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

/// Support-weighted mean of per-class F1. Zero denominators give zero
/// precision, recall or F1; classes with no support get weight zero.
/// Throws MetricsError on empty or mismatched input and labels out of range.
MetricsReport weighted_f1(std::span<const int> truth, std::span<const int> predicted, int num_classes);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const nlohmann::json& j);

}  // namespace actrec::eval
