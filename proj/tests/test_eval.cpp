#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "cliniseq/error.hpp"
#include "cliniseq/eval.hpp"
#include "cliniseq/rng.hpp"

using namespace cliniseq;
using namespace cliniseq::eval;

namespace {

using Labels = std::vector<std::uint8_t>;

// Scores on a coarse grid so that ties are common.
std::pair<Vec, Labels> random_set(Rng& rng, std::size_t n) {
  Vec s(n);
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<double>(rng.uniform_int(8)) / 4.0;
    y[i] = rng.bernoulli(0.4);
  }
  y[0] = 1;
  y[1] = 0;
  return {s, y};
}

std::vector<Vec> random_points(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<Vec> p(n, Vec(dim));
  for (auto& v : p)
    for (auto& x : v) x = rng.uniform(-1, 1);
  return p;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(*auc(Vec{0.9, 0.1}, Labels{1, 0}) == 1.0);
  CHECK(*auc(Vec{0.3, 0.3, 0.3}, Labels{1, 0, 1}) == 0.5);
  CHECK(*auc(Vec{0.1, 0.4, 0.35, 0.8}, Labels{0, 0, 1, 1}) == 0.75);
  CHECK_FALSE(auc(Vec{0.1, 0.2}, Labels{1, 1}).has_value());
  CHECK_FALSE(auc(Vec{}, Labels{}).has_value());
}

TEST_CASE("auc equals pair counting on random sets with ties") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    auto [s, y] = random_set(rng, 2 + rng.uniform_int(60));
    CHECK(*auc(s, y) == oracle::pair_auc(s, y));
  }
}

TEST_CASE("auc invariants") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto [s, y] = random_set(rng, 30);
    Vec t = s;
    for (auto& v : t) v = std::exp(3 * v) - 7;
    CHECK(*auc(t, y) == *auc(s, y));
    Labels flipped = y;
    for (auto& v : flipped) v = !v;
    CHECK(*auc(s, y) + *auc(s, flipped) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("per-time-point evaluation") {
  std::vector<Vec> scores{{0.1, 0.2, 0.3}, {0.9}, {0.5, 0.6}, {0.4, 0.1, 0.9, 0.2}};
  Labels y{0, 1, 1, 0};

  auto one = eval_per_time_point(scores, y, 1);
  REQUIRE(one.points.size() == 1);
  CHECK(*one.points[0].auc == *auc(Vec{0.1, 0.9, 0.5, 0.4}, y));

  auto full = eval_per_time_point(scores, y, 4);
  REQUIRE(full.points.size() == 4);
  // Naive re-evaluation: collect every eligible patient at each t.
  for (std::size_t t = 1; t <= 4; ++t) {
    Vec s;
    Labels l;
    for (std::size_t p = 0; p < scores.size(); ++p)
      if (scores[p].size() >= t) s.push_back(scores[p][t - 1]), l.push_back(y[p]);
    const auto& pt = full.points[t - 1];
    CHECK(pt.t == t);
    CHECK(pt.n_pos + pt.n_neg == s.size());
    if (pt.auc) CHECK(*pt.auc == oracle::pair_auc(s, l));
    else CHECK(std::count(l.begin(), l.end(), 1) * std::count(l.begin(), l.end(), 0) == 0);
  }
  CHECK(full.points[2].n_pos + full.points[2].n_neg == 2);
  CHECK_FALSE(full.points[3].auc.has_value());
  CHECK_FALSE(full.points[2].auc.has_value());
  CHECK(*full.mean_auc() == doctest::Approx((*full.points[0].auc + *full.points[1].auc) / 2));

  CHECK(*final_time_point_auc(scores, y) == *auc(Vec{0.3, 0.9, 0.6, 0.2}, y));

  std::string csv = format_auc_csv(full, "hospital", "lstm_e");
  CHECK(csv.rfind("task,model,t,n_pos,n_neg,auc\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find("hospital,lstm_e,4,0,1,\n") != std::string::npos);
}

TEST_CASE("random reports match naive evaluation") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec> scores;
    Labels y;
    for (int p = 0; p < 40; ++p) {
      Vec s(1 + rng.uniform_int(6));
      for (auto& v : s) v = rng.uniform_int(5);
      scores.push_back(s);
      y.push_back(rng.bernoulli(0.3));
    }
    auto rep = eval_per_time_point(scores, y, 6);
    for (const auto& pt : rep.points) {
      Vec s;
      Labels l;
      for (std::size_t p = 0; p < scores.size(); ++p)
        if (scores[p].size() >= pt.t) s.push_back(scores[p][pt.t - 1]), l.push_back(y[p]);
      if (pt.auc) CHECK(*pt.auc == oracle::pair_auc(s, l));
    }
  }
}

TEST_CASE("default horizon") {
  std::vector<std::size_t> lens{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(default_horizon(lens) == 9);
  CHECK(default_horizon(std::vector<std::size_t>{}) == 1);
  CHECK(default_horizon(std::vector<std::size_t>{4}) == 4);
}

TEST_CASE("top words") {
  corpus::Vocab v2({"a", "b"});
  Tensor id({2, 2}, {1, 0, 0, 1});
  auto w = top_words(id, WeightLayout::TopicMajor, 0, 1, v2);
  REQUIRE(w.size() == 1);
  CHECK(w[0].word == "a");

  corpus::Vocab v4({"ant", "bee", "cat", "dog"});
  Tensor flat({1, 4}, 0.25);
  auto f = top_words(flat, WeightLayout::TopicMajor, 0, 3, v4);
  CHECK(f[0].word == "ant");
  CHECK(f[1].word == "bee");
  CHECK(f[2].word == "cat");

  // Word-major decoder weights: topic k is column k.
  Tensor dec({4, 2}, {0.1, 0.9, 0.7, 0.2, 0.3, 0.3, 0.5, 0.0});
  auto d = top_words(dec, WeightLayout::WordMajor, 1, 2, v4);
  CHECK(d[0].word == "ant");
  CHECK(d[1].word == "cat");

  Rng rng(3);
  Tensor r({3, 4});
  for (auto& x : r.values()) x = rng.uniform_int(3);
  for (std::size_t n : {1, 4, 10}) {
    auto t = top_words(r, WeightLayout::TopicMajor, 2, n, v4);
    CHECK(t.size() == std::min<std::size_t>(n, 4));
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i].weight <= t[i - 1].weight);
  }
  CHECK_THROWS_AS(top_words(r, WeightLayout::TopicMajor, 3, 1, v4), InputError);

  CHECK(format_topics(id, WeightLayout::TopicMajor, 1, v2) == "T1: a\nT2: b\n");
}

TEST_CASE("knn overlap") {
  Rng rng(4);
  auto pts = random_points(rng, 12, 3);
  CHECK(knn_overlap_reference(pts, pts, 3) == 1.0);

  std::vector<Vec> clusters;
  std::vector<std::string> groups;
  for (int i = 0; i < 5; ++i) {
    clusters.push_back({rng.uniform(0, 0.1), rng.uniform(0, 0.1)});
    groups.push_back("A");
    clusters.push_back({10 + rng.uniform(0, 0.1), rng.uniform(0, 0.1)});
    groups.push_back("B");
  }
  CHECK(knn_overlap_groups(clusters, groups, 1) == 1.0);

  auto twenty = random_points(rng, 20, 4);
  for (std::size_t i = 0; i < 20; ++i) CHECK(nearest_neighbors(twenty, i, 3) == oracle::knn(twenty, i, 3));

  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.uniform_int(20), k = 1 + rng.uniform_int(4);
    auto a = random_points(rng, n, 3), b = random_points(rng, n, 3);
    const double got = knn_overlap_reference(a, b, k);
    CHECK(got == doctest::Approx(oracle::knn_overlap(a, b, k)).epsilon(1e-14));
    CHECK(got == doctest::Approx(knn_overlap_reference(b, a, k)).epsilon(1e-14));
  }

  // Equidistant neighbours resolve to the smaller index.
  std::vector<Vec> line{{0}, {1}, {-1}, {2}};
  CHECK(nearest_neighbors(line, 0, 1) == std::vector<std::size_t>{1});

  CHECK_THROWS_AS(knn_overlap_reference(line, line, 4), InputError);
  CHECK_THROWS_AS(knn_overlap_reference(line, line, 0), InputError);
}

TEST_CASE("latent rows round-trip") {
  std::vector<LatentRow> rows{{"p1", 1, true, {0.5, -1.25}}, {"p1", 2, true, {1.0 / 3, 0}}, {"p2", 1, false, {2, 3}}};
  auto back = parse_latents(format_latents(rows));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].patient_id == rows[i].patient_id);
    CHECK(back[i].t == rows[i].t);
    CHECK(back[i].label == rows[i].label);
    CHECK(back[i].z == rows[i].z);
  }
  CHECK_THROWS_AS(parse_latents("p\t1\t0\n"), InputError);
}
