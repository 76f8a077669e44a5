#include <doctest.h>

#include <cstring>
#include <random>

#include "actrec/data/atomic_file.hpp"
#include "actrec/data/feature_io.hpp"
#include "actrec/error.hpp"
#include "actrec/num/ops.hpp"
#include "actrec/train/checkpoint.hpp"
#include "actrec/train/trainer.hpp"
#include "model_oracles.hpp"
#include "oracles.hpp"

using namespace actrec;
using namespace actrec::train;
using models::ModelConfig;
using models::ModelKind;

namespace {

std::vector<LabeledClip> random_clips(std::size_t n, std::size_t T, std::size_t D, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<LabeledClip> out;
  for (std::size_t i = 0; i < n; ++i) {
    data::FeatureSequence f(T, D);
    for (float& v : f.values) v = g(rng);
    out.push_back({"clip" + std::to_string(i), static_cast<int>(i % 3), std::move(f)});
  }
  return out;
}

TrainConfig quick(int epochs, int batch, double lr = 1e-3) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch;
  t.learning_rate = lr;
  t.seed = 3;
  return t;
}

// Splits an encoded checkpoint into its JSON header and payload.
std::pair<nlohmann::json, std::string> split_checkpoint(const std::string& bytes) {
  std::uint64_t n = 0;
  for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[4 + i])) << (8 * i);
  return {nlohmann::json::parse(bytes.substr(12, n)), bytes.substr(12 + n)};
}

std::string join_checkpoint(const nlohmann::json& header, const std::string& payload) {
  const std::string h = header.dump();
  std::string out = "ACKP";
  const std::uint64_t n = h.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
  return out + h + payload;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("epoch order is a permutation keyed by seed and epoch") {
    const auto a = epoch_order(50, 7, 0, true);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 50; ++i) CHECK(sorted[i] == i);
    CHECK(epoch_order(50, 7, 0, true) == a);
    CHECK(epoch_order(50, 7, 1, true) != a);
    CHECK(epoch_order(50, 8, 0, true) != a);
    const auto id = epoch_order(5, 7, 3, false);
    CHECK(id == std::vector<std::size_t>{0, 1, 2, 3, 4});
  }

  TEST_CASE("train config validation and JSON") {
    TrainConfig t;
    CHECK(t.epochs == 200);
    CHECK(t.batch_size == 16);
    CHECK(t.learning_rate == 1e-3);
    CHECK(train_config_from_json(to_json(quick(3, 2))) == quick(3, 2));
    TrainConfig bad = t;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = t;
    bad.learning_rate = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"momentum", 0.9}}), ConfigError);
  }

  TEST_CASE("empty training set is a configuration error") {
    const auto c = oracle::narrow_config(ModelKind::tcn, 4);
    CHECK_THROWS_AS(train::train(c, quick(1, 2), std::span<const LabeledClip>{}), ConfigError);
  }

  TEST_CASE("learning rate zero leaves parameters unchanged") {
    for (ModelKind kind : {ModelKind::lstm, ModelKind::tcn, ModelKind::mstcn, ModelKind::mstcn_pp}) {
      const auto c = oracle::narrow_config(kind, 6);
      const auto clips = random_clips(7, 9, 6, 1);
      const TrainResult r = train::train(c, quick(3, 3, 0.0), clips);
      CHECK(r.params == models::build_model(c, 3));
      CHECK(r.history.epochs.size() == 3);
    }
  }

  TEST_CASE("single clip TCN overfits with a non-increasing loss") {
    const auto c = ModelConfig::for_kind(ModelKind::tcn, 16);
    const auto clips = random_clips(1, 20, 16, 5);
    const TrainResult r = train::train(c, quick(50, 16), clips);
    REQUIRE(r.history.epochs.size() == 50);
    const double first = r.history.epochs.front().mean_loss;
    for (std::size_t e = 1; e < r.history.epochs.size(); ++e) {
      CAPTURE(e);
      // Adam can overshoot slightly; a rise larger than 5% of the starting loss is not noise.
      CHECK(r.history.epochs[e].mean_loss <= r.history.epochs[e - 1].mean_loss + 0.05 * first);
    }
    CHECK(r.history.epochs.back().mean_loss < 0.01);
  }

  TEST_CASE("identical seeds give bit-identical parameters and history") {
    const auto c = oracle::narrow_config(ModelKind::mstcn_pp, 5);
    const auto clips = random_clips(9, 8, 5, 2);
    const auto val = random_clips(4, 8, 5, 3);
    const TrainResult a = train::train(c, quick(3, 4), clips, val);
    const TrainResult b = train::train(c, quick(3, 4), clips, val);
    CHECK(a.params == b.params);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
      CHECK(a.history.epochs[e].mean_loss == b.history.epochs[e].mean_loss);
      CHECK(a.history.epochs[e].val_weighted_f1 == b.history.epochs[e].val_weighted_f1);
    }
    CHECK(a.validation.size() == 4);
    TrainConfig other = quick(3, 4);
    other.seed = 4;
    CHECK_FALSE(train::train(c, other, clips, val).params == a.params);
  }

  TEST_CASE("one batch moves every parameter tensor of every default architecture") {
    for (ModelKind kind : {ModelKind::lstm, ModelKind::tcn, ModelKind::mstcn, ModelKind::mstcn_pp}) {
      const auto c = ModelConfig::for_kind(kind, 12);
      const auto clips = random_clips(4, 20, 12, 6);
      const TrainResult r = train::train(c, quick(1, 4), clips);
      const auto init = models::build_model(c, 3);
      for (std::size_t i = 0; i < init.size(); ++i) {
        CAPTURE(init.name(i));
        CHECK_FALSE(r.params.at(i) == init.at(i));
      }
    }
  }

  TEST_CASE("the same batch loss twice is identical") {
    const auto c = oracle::narrow_config(ModelKind::mstcn, 6);
    const auto params = models::build_model(c, 1);
    const auto clips = random_clips(5, 10, 6, 8);
    const std::vector<std::size_t> batch{4, 0, 2};
    const auto a = batch_gradients(c, params, std::span<const LabeledClip>(clips), batch, true);
    const auto b = batch_gradients(c, params, std::span<const LabeledClip>(clips), batch, true);
    CHECK(a.loss == b.loss);
    for (std::size_t i = 0; i < a.grads.size(); ++i) CHECK(a.grads[i] == b.grads[i]);
  }

  TEST_CASE("without stage supervision the gradient is the final-head gradient") {
    for (ModelKind kind : {ModelKind::mstcn, ModelKind::mstcn_pp}) {
      const auto c = oracle::narrow_config(kind, 5);
      const auto params = models::build_model(c, 2).cast<double>();
      const auto clips = random_clips(3, 11, 5, 9);
      const std::vector<std::size_t> batch{0, 1, 2};
      const auto got = batch_gradients(c, params, std::span<const LabeledClip>(clips), batch, false);

      // Reference: the model's forward graph with only the final cross-entropy.
      num::Graph<double> g;
      const auto bound = models::BoundParams::bind(g, params);
      num::Tensor<double> x({3, 11, 5});
      std::vector<int> labels;
      for (std::size_t b = 0; b < 3; ++b) {
        for (std::size_t i = 0; i < 55; ++i) x[b * 55 + i] = clips[b].features.values[i];
        labels.push_back(clips[b].label);
      }
      const auto out = models::forward(g, c, bound, g.constant(x));
      const num::Var loss = num::cross_entropy(g, out.log_probs, std::span<const int>(labels));
      g.backward(loss);
      CHECK(got.loss == doctest::Approx(g.value(loss)[0]).epsilon(1e-14));
      for (std::size_t i = 0; i < params.size(); ++i) {
        CAPTURE(params.name(i));
        const auto& ref = g.grad(bound.vars()[i]);
        const auto& mine = got.grads[i];
        if (ref.empty() || mine.empty()) {
          // Unreached on one side means unreached on both, or all zeros.
          const auto& other = ref.empty() ? mine : ref;
          for (std::size_t j = 0; j < other.size(); ++j) CHECK(other[j] == 0.0);
          continue;
        }
        for (std::size_t j = 0; j < ref.size(); ++j) CHECK(mine[j] == doctest::Approx(ref[j]).epsilon(1e-12));
      }
      // The last stage's projection only feeds the stage loss, so it gets nothing here.
      const std::string last = "stage" + std::to_string(c.stage_count() - 1) + "/output/weight";
      const auto& g_last = got.grads[params.index_of(last)];
      for (std::size_t j = 0; j < g_last.size(); ++j) CHECK(g_last[j] == 0.0);
    }
  }

  TEST_CASE("stage supervision adds the mean stage loss") {
    const auto c = oracle::narrow_config(ModelKind::mstcn, 4);
    const auto params = models::build_model(c, 5).cast<double>();
    const auto clips = random_clips(2, 7, 4, 1);
    const std::vector<std::size_t> batch{0, 1};
    const double with = batch_gradients(c, params, std::span<const LabeledClip>(clips), batch, true).loss;
    const double without = batch_gradients(c, params, std::span<const LabeledClip>(clips), batch, false).loss;
    double stage_sum = 0;
    for (std::size_t b : batch) {
      const auto p = models::forward_clip(c, params.cast<float>(), clips[b].features);
      for (const auto& s : p.per_stage_log_probs) stage_sum -= s[static_cast<std::size_t>(clips[b].label)];
    }
    const double stage_mean = stage_sum / (2.0 * c.stage_count());
    CHECK(with - without == doctest::Approx(stage_mean).epsilon(1e-5));
  }

  TEST_CASE("mixed clip lengths in a batch average over clips") {
    const auto c = oracle::narrow_config(ModelKind::tcn, 3);
    const auto params = models::build_model(c, 5).cast<double>();
    auto clips = random_clips(2, 6, 3, 4);
    auto longer = random_clips(1, 9, 3, 5);
    clips.push_back(longer[0]);
    const std::vector<std::size_t> all{0, 1, 2}, first{0}, second{1}, third{2};
    const std::span<const LabeledClip> cs(clips);
    const double mixed = batch_gradients(c, params, cs, all, true).loss;
    const double mean = (batch_gradients(c, params, cs, first, true).loss +
                         batch_gradients(c, params, cs, second, true).loss +
                         batch_gradients(c, params, cs, third, true).loss) /
                        3.0;
    CHECK(mixed == doctest::Approx(mean).epsilon(1e-12));
  }

  TEST_CASE("non-finite features abort training with context") {
    const auto c = oracle::narrow_config(ModelKind::tcn, 3);
    auto clips = random_clips(4, 5, 3, 1);
    clips[2].features.values[4] = std::numeric_limits<float>::infinity();
    try {
      train::train(c, quick(2, 2), clips);
      FAIL("expected a training error");
    } catch (const TrainingError& e) {
      CHECK(std::string(e.what()).find("epoch") != std::string::npos);
      CHECK(std::string(e.what()).find("batch") != std::string::npos);
    }
  }

  TEST_CASE("checkpoints round-trip bit for bit") {
    oracle::TempDir dir("ckpt");
    for (ModelKind kind : {ModelKind::lstm, ModelKind::tcn, ModelKind::mstcn, ModelKind::mstcn_pp}) {
      const auto c = oracle::narrow_config(kind, 7);
      const auto trained = train::train(c, quick(1, 4), random_clips(6, 8, 7, 2)).params;
      const auto path = dir / (std::string(to_string(kind)) + ".ackp");
      save_checkpoint(path, c, trained, {{"note", "x"}});
      const Checkpoint ck = load_checkpoint(path, kind);
      CHECK(ck.config == c);
      CHECK(ck.params == trained);
      CHECK(ck.metadata.at("note") == "x");
      for (const auto& clip : random_clips(10, 12, 7, 11)) {
        CHECK(models::forward_clip(c, trained, clip.features) == models::forward_clip(ck.config, ck.params, clip.features));
      }
    }
  }

  TEST_CASE("checkpoint errors") {
    const auto c = oracle::narrow_config(ModelKind::tcn, 4);
    const auto params = models::build_model(c, 1);
    const std::string good = encode_checkpoint(c, params);
    CHECK_NOTHROW(decode_checkpoint(good));

    CHECK_THROWS_AS(decode_checkpoint(good, ModelKind::mstcn), CheckpointError);

    auto [header, payload] = split_checkpoint(good);
    auto versioned = header;
    versioned["format_version"] = 2;
    CHECK_THROWS_AS(decode_checkpoint(join_checkpoint(versioned, payload)), CheckpointError);

    // Drop the first parameter from both the table and the payload.
    auto missing = header;
    const std::string dropped = missing["parameters"][0]["name"];
    std::size_t elements = 1;
    for (auto d : missing["parameters"][0]["shape"]) elements *= d.get<std::size_t>();
    missing["parameters"].erase(0);
    try {
      decode_checkpoint(join_checkpoint(missing, payload.substr(4 * elements)));
      FAIL("expected a missing-parameter error");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find(dropped) != std::string::npos);
    }

    auto reshaped = header;
    reshaped["parameters"][0]["shape"][0] = 99;
    CHECK_THROWS_AS(decode_checkpoint(join_checkpoint(reshaped, payload)), CheckpointError);

    CHECK_THROWS_AS(decode_checkpoint(join_checkpoint(header, payload.substr(4))), CheckpointError);
    CHECK_THROWS_AS(decode_checkpoint("NOPE" + good.substr(4)), CheckpointError);

    std::string nan = good;
    const float bad = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(nan.data() + nan.size() - 4, &bad, 4);
    CHECK_THROWS_AS(decode_checkpoint(nan), CheckpointError);

    auto wrong = params;
    wrong.at(0) = num::Tensor<float>({1});
    CHECK_THROWS_AS(encode_checkpoint(c, wrong), CheckpointError);
  }

  TEST_CASE("a reloaded checkpoint reproduces the validation predictions") {
    oracle::TempDir dir("ckpt_val");
    const auto c = oracle::narrow_config(ModelKind::mstcn, 6);
    const auto val = random_clips(5, 10, 6, 21);
    const TrainResult r = train::train(c, quick(2, 4), random_clips(8, 10, 6, 20), val);
    save_checkpoint(dir / "m.ackp", c, r.params);
    const Checkpoint ck = load_checkpoint(dir / "m.ackp");
    REQUIRE(r.validation.size() == val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
      CHECK(r.validation[i].clip_id == val[i].clip_id);
      CHECK(models::forward_clip(ck.config, ck.params, val[i].features) == r.validation[i].prediction);
    }
  }

  TEST_CASE("load_clips checks frame counts and dimensions") {
    oracle::TempDir dir("load");
    data::write_features(dir / "a.fsq", data::FeatureSequence(4, 3));
    data::write_features(dir / "b.fsq", data::FeatureSequence(4, 5));
    using data::ActionLabel;
    const data::Manifest ok({{"a", "s", ActionLabel::spinning, "a.fsq", 4, std::nullopt}}, dir.path());
    CHECK(load_clips(ok).front().label == 2);
    const data::Manifest frames({{"a", "s", ActionLabel::spinning, "a.fsq", 5, std::nullopt}}, dir.path());
    CHECK_THROWS_AS(load_clips(frames), DataError);
    const data::Manifest dims({{"a", "s", ActionLabel::spinning, "a.fsq", 4, std::nullopt},
                               {"b", "s", ActionLabel::spinning, "b.fsq", 4, std::nullopt}},
                              dir.path());
    CHECK_THROWS_AS(load_clips(dims), DataError);
  }
}
