#include "actrec/eval/metrics.hpp"

#include "actrec/error.hpp"

namespace actrec::eval {

MetricsReport weighted_f1(std::span<const int> truth, std::span<const int> predicted, int num_classes) {
  if (truth.empty()) throw MetricsError("weighted_f1: no samples");
  if (truth.size() != predicted.size()) {
    throw MetricsError("weighted_f1: " + std::to_string(truth.size()) + " labels but " +
                       std::to_string(predicted.size()) + " predictions");
  }
  if (num_classes < 1) throw MetricsError("weighted_f1: num_classes must be positive");
  const auto C = static_cast<std::size_t>(num_classes);

  MetricsReport r;
  r.num_classes = num_classes;
  r.confusion.assign(C, std::vector<long>(C, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes) {
      throw MetricsError("weighted_f1: label out of range at sample " + std::to_string(i));
    }
    ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }

  const double total = static_cast<double>(truth.size());
  long correct = 0;
  r.per_class.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const long tp = r.confusion[c][c];
    long predicted_c = 0;
    long support = 0;
    for (std::size_t k = 0; k < C; ++k) {
      predicted_c += r.confusion[k][c];
      support += r.confusion[c][k];
    }
    ClassMetrics& m = r.per_class[c];
    m.support = support;
    m.precision = predicted_c == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted_c);
    m.recall = support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(support);
    const double pr = m.precision + m.recall;
    m.f1 = pr == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / pr;
    m.weight = static_cast<double>(support) / total;
    r.weighted_f1 += m.f1 * m.weight;
    correct += tp;
  }
  r.accuracy = static_cast<double>(correct) / total;
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const ClassMetrics& m : r.per_class) {
    per_class.push_back({{"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"weight", m.weight},
                         {"support", m.support}});
  }
  return {{"num_classes", r.num_classes},
          {"confusion", r.confusion},
          {"per_class", per_class},
          {"weighted_f1", r.weighted_f1},
          {"accuracy", r.accuracy}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.num_classes = j.at("num_classes").get<int>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<long>>>();
    for (const auto& m : j.at("per_class")) {
      r.per_class.push_back({m.at("precision").get<double>(), m.at("recall").get<double>(), m.at("f1").get<double>(),
                             m.at("weight").get<double>(), m.at("support").get<long>()});
    }
    r.weighted_f1 = j.at("weighted_f1").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw MetricsError(std::string("malformed metrics report: ") + e.what());
  }
}

}  // namespace actrec::eval
