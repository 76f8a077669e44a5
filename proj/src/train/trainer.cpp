#include "actrec/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <random>

#include "actrec/data/feature_io.hpp"
#include "actrec/error.hpp"
#include "actrec/eval/metrics.hpp"
#include "actrec/num/adam.hpp"
#include "actrec/num/ops.hpp"

namespace actrec::train {

using models::BoundParams;
using models::ModelConfig;
using num::Graph;
using num::Tensor;
using num::Var;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be finite and >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"stage_supervision", c.stage_supervision},
          {"shuffle", c.shuffle}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "stage_supervision") c.stage_supervision = value.get<bool>();
      else if (key == "shuffle") c.shuffle = value.get<bool>();
      else throw ConfigError("train config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainHistory& h) {
  nlohmann::json out = nlohmann::json::array();
  for (const EpochRecord& e : h.epochs) {
    nlohmann::json row{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"wall_time_s", e.wall_time_s}};
    row["val_weighted_f1"] = e.val_weighted_f1 ? nlohmann::json(*e.val_weighted_f1) : nlohmann::json(nullptr);
    out.push_back(row);
  }
  return out;
}

std::vector<LabeledClip> load_clips(const data::Manifest& manifest) {
  std::vector<LabeledClip> clips;
  clips.reserve(manifest.size());
  for (const data::ClipRecord& r : manifest.records()) {
    LabeledClip clip{r.clip_id, data::label_id(r.label), data::read_features(manifest.resolve(r))};
    if (r.n_frames != 0 && clip.features.frames != r.n_frames) {
      throw DataError("clip '" + r.clip_id + "': manifest says " + std::to_string(r.n_frames) +
                      " frames, feature file has " + std::to_string(clip.features.frames));
    }
    if (!clips.empty() && clip.features.dim != clips.front().features.dim) {
      throw DataError("clip '" + r.clip_id + "' has feature dimension " + std::to_string(clip.features.dim) +
                      ", expected " + std::to_string(clips.front().features.dim));
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch, bool shuffle) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (!shuffle || n < 2) return order;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
  return order;
}

template <class S>
Var batch_loss(Graph<S>& g, const ModelConfig& config, const BoundParams& params, std::span<const LabeledClip> clips,
               std::span<const std::size_t> batch, bool stage_supervision) {
  if (batch.empty()) throw ConfigError("empty minibatch");
  // Equal-length groups, in order of first appearance in the batch.
  std::map<std::size_t, std::vector<std::size_t>> by_length;
  std::vector<std::size_t> lengths;
  for (std::size_t idx : batch) {
    const std::size_t T = clips[idx].features.frames;
    if (!by_length.count(T)) lengths.push_back(T);
    by_length[T].push_back(idx);
  }
  const bool stages = stage_supervision && models::is_multi_stage(config.kind);
  const auto D = static_cast<std::size_t>(config.input_dim);
  Var total;
  for (std::size_t T : lengths) {
    const auto& members = by_length[T];
    std::vector<S> values;
    values.reserve(members.size() * T * D);
    std::vector<int> labels;
    for (std::size_t idx : members) {
      const LabeledClip& c = clips[idx];
      if (c.features.dim != D) {
        throw DataError("clip '" + c.clip_id + "' has feature dimension " + std::to_string(c.features.dim) +
                        ", model expects " + std::to_string(D));
      }
      values.insert(values.end(), c.features.values.begin(), c.features.values.end());
      labels.push_back(c.label);
    }
    Var input = g.constant(Tensor<S>({members.size(), T, D}, std::move(values)));
    const models::ForwardOutputs out = models::forward(g, config, params, input);
    Var loss = num::cross_entropy(g, out.log_probs, labels);
    if (stages && !out.stage_log_probs.empty()) {
      Var stage_sum = num::cross_entropy(g, out.stage_log_probs[0], labels);
      for (std::size_t s = 1; s < out.stage_log_probs.size(); ++s) {
        stage_sum = num::add(g, stage_sum, num::cross_entropy(g, out.stage_log_probs[s], labels));
      }
      loss = num::add(g, loss, num::scale(g, stage_sum, static_cast<S>(1.0 / out.stage_log_probs.size())));
    }
    // Group mean -> contribution to the batch mean.
    if (lengths.size() > 1) {
      loss = num::scale(g, loss, static_cast<S>(static_cast<double>(members.size()) / static_cast<double>(batch.size())));
    }
    total = total.valid() ? num::add(g, total, loss) : loss;
  }
  return total;
}

template <class S>
BatchGradients<S> batch_gradients(const ModelConfig& config, const models::Params<S>& params,
                                  std::span<const LabeledClip> clips, std::span<const std::size_t> batch,
                                  bool stage_supervision) {
  Graph<S> g(true);
  const BoundParams bound = BoundParams::bind(g, params);
  Var loss = batch_loss(g, config, bound, clips, batch, stage_supervision);
  g.backward(loss);
  BatchGradients<S> out;
  out.loss = static_cast<double>(g.value(loss)[0]);
  out.grads.reserve(params.size());
  for (Var v : bound.vars()) out.grads.push_back(g.grad(v));
  return out;
}

TrainResult train(const ModelConfig& config, const TrainConfig& tconfig, std::span<const LabeledClip> train_set,
                  std::span<const LabeledClip> validation, const EpochCallback& on_epoch) {
  config.validate();
  tconfig.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  for (const LabeledClip& c : train_set) {
    if (c.label < 0 || c.label >= config.num_classes) {
      throw DataError("clip '" + c.clip_id + "' has label " + std::to_string(c.label) + " outside [0, " +
                      std::to_string(config.num_classes) + ")");
    }
  }

  TrainResult result;
  result.params = models::build_model(config, tconfig.seed);
  num::AdamOptions opts;
  opts.learning_rate = tconfig.learning_rate;
  num::AdamState<float> adam(result.params, opts);
  const auto batch_size = static_cast<std::size_t>(tconfig.batch_size);

  for (int epoch = 0; epoch < tconfig.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order = epoch_order(train_set.size(), tconfig.seed, epoch, tconfig.shuffle);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      const auto context = [&] {
        return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) + ": ";
      };
      try {
        BatchGradients<float> bg =
            batch_gradients(config, result.params, train_set, batch, tconfig.stage_supervision);
        if (!std::isfinite(bg.loss)) throw TrainingError("non-finite loss");
        num::adam_step(result.params, bg.grads, adam);
        loss_sum += bg.loss * static_cast<double>(batch.size());
      } catch (const NumericError& e) {
        throw TrainingError(context() + e.what());
      } catch (const TrainingError& e) {
        throw TrainingError(context() + e.what());
      }
    }
    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = loss_sum / static_cast<double>(train_set.size());
    if (!validation.empty()) {
      std::vector<int> truth, pred;
      for (const LabeledClip& c : validation) {
        truth.push_back(c.label);
        pred.push_back(models::forward_clip(config, result.params, c.features).predicted_label);
      }
      record.val_weighted_f1 = eval::weighted_f1(truth, pred, config.num_classes).weighted_f1;
    }
    record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }

  for (const LabeledClip& c : validation) {
    result.validation.push_back({c.clip_id, c.label, models::forward_clip(config, result.params, c.features)});
  }
  return result;
}

#define ACTREC_INSTANTIATE_TRAIN(S)                                                                              \
  template Var batch_loss<S>(Graph<S>&, const ModelConfig&, const BoundParams&, std::span<const LabeledClip>,    \
                             std::span<const std::size_t>, bool);                                                \
  template BatchGradients<S> batch_gradients<S>(const ModelConfig&, const models::Params<S>&,                   \
                                                std::span<const LabeledClip>, std::span<const std::size_t>, bool);

ACTREC_INSTANTIATE_TRAIN(float)
ACTREC_INSTANTIATE_TRAIN(double)

}  // namespace actrec::train
