#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <set>

#include "actrec/error.hpp"
#include "actrec/eval/folds.hpp"
#include "actrec/eval/metrics.hpp"
#include "oracles.hpp"

using namespace actrec;
using namespace actrec::eval;

namespace {

data::Manifest manifest_with(const std::vector<std::pair<std::string, int>>& subject_counts) {
  std::vector<data::ClipRecord> rows;
  for (const auto& [subject, count] : subject_counts) {
    for (int i = 0; i < count; ++i) {
      const std::string id = subject + "_c" + std::to_string(i);
      rows.push_back({id, subject, data::label_from_id(i % 3), "f/" + id + ".fsq", 20, std::nullopt});
    }
  }
  return data::Manifest(std::move(rows));
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("weighted F1 worked examples") {
    const std::vector<int> t{0, 0, 1, 2}, p{0, 1, 1, 2};
    const MetricsReport r = weighted_f1(t, p, 3);
    CHECK(r.weighted_f1 == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.per_class[0].precision == 1.0);
    CHECK(r.per_class[0].recall == 0.5);
    CHECK(r.per_class[1].precision == 0.5);
    CHECK(r.per_class[2].f1 == 1.0);
    CHECK(r.per_class[0].weight == 0.5);
    CHECK(r.confusion[0][1] == 1);
    CHECK(r.accuracy == 0.75);

    const std::vector<int> balanced{0, 1, 2, 0, 1, 2}, single(6, 1);
    CHECK(weighted_f1(balanced, single, 3).weighted_f1 == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(weighted_f1(balanced, balanced, 3).weighted_f1 == 1.0);
  }

  TEST_CASE("weighted F1 zero-division conventions and errors") {
    // Class 2 has no support and is never predicted.
    const std::vector<int> t{0, 1, 1}, p{1, 1, 1};
    const MetricsReport r = weighted_f1(t, p, 3);
    CHECK(r.per_class[0].precision == 0.0);
    CHECK(r.per_class[0].f1 == 0.0);
    CHECK(r.per_class[2].weight == 0.0);
    CHECK(r.per_class[2].f1 == 0.0);
    CHECK_THROWS_AS(weighted_f1(std::vector<int>{}, std::vector<int>{}, 3), MetricsError);
    CHECK_THROWS_AS(weighted_f1(std::vector<int>{0}, std::vector<int>{0, 1}, 3), MetricsError);
    CHECK_THROWS_AS(weighted_f1(std::vector<int>{0}, std::vector<int>{3}, 3), MetricsError);
    CHECK_THROWS_AS(weighted_f1(std::vector<int>{-1}, std::vector<int>{0}, 3), MetricsError);
  }

  TEST_CASE("weighted F1 agrees with the brute-force oracle on random cases") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
      const int C = 2 + static_cast<int>(rng() % 5);
      const std::size_t n = 1 + rng() % 60;
      std::vector<int> t(n), p(n);
      for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(C));
        // Bias toward correct predictions so every regime shows up.
        p[i] = rng() % 3 == 0 ? t[i] : static_cast<int>(rng() % static_cast<std::uint64_t>(C));
      }
      const auto expect = oracle::weighted_f1(t, p, C);
      const MetricsReport r = weighted_f1(t, p, C);
      CHECK(std::abs(r.weighted_f1 - expect.weighted) < 1e-12);
      for (int c = 0; c < C; ++c) CHECK(std::abs(r.per_class[static_cast<std::size_t>(c)].f1 - expect.per_class[static_cast<std::size_t>(c)]) < 1e-12);
      CHECK(r.weighted_f1 >= 0.0);
      CHECK(r.weighted_f1 <= 1.0);
      double wsum = 0;
      for (const auto& m : r.per_class) wsum += m.weight;
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("weighted F1 is invariant to sample order and to consistent relabeling") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      // Equal support per class so relabeling cannot move the weights.
      const std::size_t per = 1 + rng() % 8;
      std::vector<int> t, p;
      for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < per; ++i) {
          t.push_back(c);
          p.push_back(static_cast<int>(rng() % 3));
        }
      }
      const double base = weighted_f1(t, p, 3).weighted_f1;

      std::vector<std::size_t> order(t.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<int> ts, ps;
      for (std::size_t i : order) {
        ts.push_back(t[i]);
        ps.push_back(p[i]);
      }
      CHECK(weighted_f1(ts, ps, 3).weighted_f1 == doctest::Approx(base).epsilon(1e-12));

      const int perm[3] = {2, 0, 1};
      std::vector<int> tr, pr;
      for (std::size_t i = 0; i < t.size(); ++i) {
        tr.push_back(perm[t[i]]);
        pr.push_back(perm[p[i]]);
      }
      CHECK(weighted_f1(tr, pr, 3).weighted_f1 == doctest::Approx(base).epsilon(1e-12));
    }
  }

  TEST_CASE("metrics JSON round trip") {
    const std::vector<int> t{0, 2, 1, 1, 0}, p{0, 1, 1, 2, 0};
    const MetricsReport r = weighted_f1(t, p, 3);
    CHECK(metrics_from_json(to_json(r)) == r);
  }

  TEST_CASE("folds: K subjects give one subject per fold") {
    const auto m = manifest_with({{"a", 3}, {"b", 5}, {"c", 1}, {"d", 2}, {"e", 4}});
    const FoldPlan plan = make_folds(m, 5, 0);
    REQUIRE(plan.size() == 5);
    for (const Fold& f : plan.folds) CHECK(f.subjects.size() == 1);
  }

  TEST_CASE("folds: ten equal subjects and K = 5 give two subjects per fold") {
    std::vector<std::pair<std::string, int>> rows;
    for (int s = 0; s < 10; ++s) rows.push_back({"s" + std::to_string(s), 6});
    const auto m = manifest_with(rows);
    for (std::uint64_t seed : {0u, 1u, 77u}) {
      const FoldPlan plan = make_folds(m, 5, seed);
      for (const Fold& f : plan.folds) {
        CHECK(f.subjects.size() == 2);
        CHECK(f.clip_count == 12);
      }
    }
  }

  TEST_CASE("folds: errors") {
    const auto m = manifest_with({{"a", 3}, {"b", 5}, {"c", 1}, {"d", 2}});
    CHECK_THROWS_AS(make_folds(m, 5, 0), ConfigError);
    CHECK_THROWS_AS(make_folds(m, 1, 0), ConfigError);
    const FoldPlan plan = make_folds(m, 2, 0);
    CHECK_THROWS_AS(plan.fold_of("zz"), ConfigError);
  }

  TEST_CASE("folds: partition properties on random manifests") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t K = 2 + rng() % 5;
      const std::size_t n_subjects = K + rng() % 20;
      std::vector<std::pair<std::string, int>> rows;
      int largest = 0;
      for (std::size_t s = 0; s < n_subjects; ++s) {
        const int count = 1 + static_cast<int>(rng() % 9);
        largest = std::max(largest, count);
        rows.push_back({"subj" + std::to_string(s), count});
      }
      const auto m = manifest_with(rows);
      const std::uint64_t seed = rng();
      const FoldPlan plan = make_folds(m, K, seed);
      REQUIRE(plan.size() == K);

      std::set<std::string> seen;
      long lo = std::numeric_limits<long>::max(), hi = 0;
      std::size_t total = 0;
      for (std::size_t k = 0; k < K; ++k) {
        const Fold& f = plan.folds[k];
        CHECK(std::is_sorted(f.subjects.begin(), f.subjects.end()));
        CHECK_FALSE(f.subjects.empty());
        for (const auto& s : f.subjects) {
          CHECK(seen.insert(s).second);
          CHECK(plan.fold_of(s) == k);
        }
        const auto test = plan.test_set(m, k);
        const auto train = plan.train_set(m, k);
        CHECK(static_cast<long>(test.size()) == f.clip_count);
        CHECK(test.size() + train.size() == m.size());
        for (const auto& r : train.records()) CHECK(plan.fold_of(r.subject_id) != k);
        total += test.size();
        lo = std::min(lo, f.clip_count);
        hi = std::max(hi, f.clip_count);
      }
      CHECK(seen.size() == n_subjects);
      CHECK(total == m.size());
      CHECK(hi - lo <= largest);

      CHECK(make_folds(m, K, seed) == plan);
      // Row order in the manifest does not matter.
      auto shuffled = m.records();
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      CHECK(make_folds(data::Manifest(shuffled), K, seed) == plan);
    }
  }

  TEST_CASE("folds: the seed only breaks ties") {
    // The seed may permute which fold index a group lands in, but with
    // unequal sizes the grouping of subjects itself is fixed.
    const auto m = manifest_with({{"a", 9}, {"b", 7}, {"c", 5}, {"d", 4}, {"e", 3}});
    auto grouping = [&](std::uint64_t seed) {
      std::set<std::vector<std::string>> groups;
      for (const Fold& f : make_folds(m, 3, seed).folds) groups.insert(f.subjects);
      return groups;
    };
    for (std::uint64_t seed = 2; seed < 8; ++seed) CHECK(grouping(seed) == grouping(1));
    std::vector<std::pair<std::string, int>> rows;
    for (int s = 0; s < 12; ++s) rows.push_back({"s" + std::to_string(s), 4});
    const auto eq = manifest_with(rows);
    const FoldPlan first = make_folds(eq, 4, 0);
    bool any_different = false;
    for (std::uint64_t seed = 1; seed < 8; ++seed) any_different = any_different || !(make_folds(eq, 4, seed) == first);
    CHECK(any_different);
  }

  TEST_CASE("fold plan JSON lists every fold") {
    const auto m = manifest_with({{"a", 3}, {"b", 5}, {"c", 1}});
    const auto j = to_json(make_folds(m, 3, 4));
    CHECK(j.at("folds").size() == 3);
  }
}
