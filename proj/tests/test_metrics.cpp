// Copyright 2026 The DySeqDPP Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dyseqdpp/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace dyseqdpp {
namespace {

ConceptVector random_concepts(int c, Rng& rng) {
  ConceptVector v(static_cast<std::size_t>(c));
  for (auto& b : v) b = static_cast<std::uint8_t>(rng.uniform() < 0.5);
  return v;
}

std::vector<std::size_t> random_shots(std::size_t universe, std::size_t max_count, Rng& rng) {
  std::vector<std::size_t> all(universe);
  std::iota(all.begin(), all.end(), 0);
  const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(std::min(universe, max_count))));
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(universe - 1 - i)))]);
  std::vector<std::size_t> out(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Hamming, Examples) {
  const ConceptVector zero(54, 0), one(54, 1);
  EXPECT_EQ(hamming(zero, zero), 0);
  EXPECT_EQ(hamming(zero, one), 54);
  ConceptVector half = zero;
  std::fill(half.begin(), half.begin() + 27, 1);
  EXPECT_EQ(hamming(zero, half), 27);
  EXPECT_THROW(hamming(zero, ConceptVector(53, 0)), ShapeError);
}

TEST(BipartiteMatch, WorkedExample) {
  std::vector<ConceptVector> c(10, ConceptVector(54, 0));
  std::fill(c[9].begin(), c[9].begin() + 27, 1);
  const MatchScore s = bipartite_match_f1({2, 5}, {2, 9}, c, {4, MatchConfig::Mode::Weighted, 0});
  EXPECT_NEAR(s.size, 1.5, 1e-15);
  EXPECT_NEAR(s.precision, 0.75, 1e-15);
  EXPECT_NEAR(s.recall, 0.75, 1e-15);
  EXPECT_NEAR(s.f1, 0.75, 1e-15);
  ASSERT_EQ(s.matching.size(), 2u);
  EXPECT_EQ(s.matching[0], (std::pair<std::size_t, std::size_t>{2, 2}));
  EXPECT_EQ(s.matching[1], (std::pair<std::size_t, std::size_t>{5, 9}));
}

TEST(BipartiteMatch, TrivialCases) {
  Rng rng(1);
  std::vector<ConceptVector> c;
  for (int i = 0; i < 20; ++i) c.push_back(random_concepts(54, rng));
  for (int k : {0, 3, 12}) {
    const MatchScore same = bipartite_match_f1({1, 4, 9}, {1, 4, 9}, c, {k, MatchConfig::Mode::Weighted, 0});
    EXPECT_DOUBLE_EQ(same.f1, 1.0);
    EXPECT_DOUBLE_EQ(same.precision, 1.0);
  }
  EXPECT_EQ(bipartite_match_f1({1, 3}, {2, 4}, c, {0, MatchConfig::Mode::Weighted, 0}).f1, 0.0);
  EXPECT_EQ(bipartite_match_f1({}, {}, c).f1, 1.0);
  EXPECT_EQ(bipartite_match_f1({}, {2}, c).f1, 0.0);
  EXPECT_EQ(bipartite_match_f1({2}, {}, c).f1, 0.0);
  EXPECT_THROW(bipartite_match_f1({25}, {2}, c), InvalidInput);
}

TEST(BipartiteMatch, AgreesWithExhaustiveOracle) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const int dim = static_cast<int>(rng.uniform_int(1, 12));
    std::vector<ConceptVector> c;
    for (int i = 0; i < 24; ++i) c.push_back(random_concepts(dim, rng));
    const auto sys = random_shots(24, 6, rng);
    const auto usr = random_shots(24, 6, rng);
    std::optional<int> window;
    if (rng.uniform() < 0.75) window = static_cast<int>(rng.uniform_int(0, 10));
    const MatchScore got = bipartite_match_f1(sys, usr, c, {window, MatchConfig::Mode::Weighted, 0});
    const oracle::Prf ref = oracle::matching_f1(sys, usr, c, window);
    EXPECT_NEAR(got.size, ref.size, 1e-12);
    EXPECT_NEAR(got.precision, ref.p, 1e-12);
    EXPECT_NEAR(got.recall, ref.r, 1e-12);
    EXPECT_NEAR(got.f1, ref.f, 1e-12);
    double total = 0.0;
    for (const auto& [a, b] : got.matching) total += match_weight(a, b, c, {window, MatchConfig::Mode::Weighted, 0});
    EXPECT_NEAR(total, got.size, 1e-12);
  }
}

TEST(BipartiteMatch, WindowMonotonicity) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<ConceptVector> c;
    for (int i = 0; i < 40; ++i) c.push_back(random_concepts(8, rng));
    const auto sys = random_shots(40, 12, rng);
    const auto usr = random_shots(40, 12, rng);
    double prev = -1.0;
    for (std::optional<int> k : {std::optional<int>(0), std::optional<int>(2), std::optional<int>(8),
                                 std::optional<int>(16), std::optional<int>()}) {
      const double size = bipartite_match_f1(sys, usr, c, {k, MatchConfig::Mode::Weighted, 0}).size;
      EXPECT_GE(size, prev - 1e-12);
      prev = size;
    }
  }
}

TEST(BipartiteMatch, SymmetryBoundsAndRange) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<ConceptVector> c;
    for (int i = 0; i < 30; ++i) c.push_back(random_concepts(6, rng));
    const auto sys = random_shots(30, 10, rng);
    const auto usr = random_shots(30, 10, rng);
    for (auto mode : {MatchConfig::Mode::Weighted, MatchConfig::Mode::Cardinality}) {
      const MatchConfig cfg{5, mode, 2};
      const MatchScore ab = bipartite_match_f1(sys, usr, c, cfg);
      const MatchScore ba = bipartite_match_f1(usr, sys, c, cfg);
      EXPECT_NEAR(ab.f1, ba.f1, 1e-12);
      EXPECT_NEAR(ab.precision, ba.recall, 1e-12);
      EXPECT_NEAR(ab.recall, ba.precision, 1e-12);
      EXPECT_LE(ab.size, static_cast<double>(std::min(sys.size(), usr.size())) + 1e-12);
      for (double v : {ab.precision, ab.recall, ab.f1}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(BipartiteMatch, FullWeightIffPerfectUnitMatching) {
  std::vector<ConceptVector> c(10, ConceptVector(4, 0));
  c[7] = {1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(bipartite_match_f1({1, 2}, {3, 4}, c).size, 2.0);
  EXPECT_LT(bipartite_match_f1({1, 7}, {3, 4}, c).size, 2.0);
}

TEST(BipartiteMatch, CardinalityMode) {
  std::vector<ConceptVector> c(10, ConceptVector(8, 0));
  c[5] = {1, 1, 0, 0, 0, 0, 0, 0};
  const MatchConfig strict{std::nullopt, MatchConfig::Mode::Cardinality, 1};
  const MatchConfig loose{std::nullopt, MatchConfig::Mode::Cardinality, 2};
  EXPECT_DOUBLE_EQ(bipartite_match_f1({5}, {0}, c, strict).size, 0.0);
  EXPECT_DOUBLE_EQ(bipartite_match_f1({5}, {0}, c, loose).size, 1.0);
}

TEST(TemporalOverlap, Examples) {
  EXPECT_DOUBLE_EQ(temporal_overlap_f1(std::vector<std::size_t>{1, 2, 3}, std::vector<std::size_t>{1, 2, 3}).f1, 1.0);
  EXPECT_DOUBLE_EQ(temporal_overlap_f1(std::vector<std::size_t>{1, 2}, std::vector<std::size_t>{3, 4}).f1, 0.0);
  std::vector<std::size_t> sys(10), usr(20);
  std::iota(sys.begin(), sys.end(), 0);
  std::iota(usr.begin(), usr.end(), 2);
  const MatchScore s = temporal_overlap_f1(sys, usr);
  EXPECT_NEAR(s.precision, 0.8, 1e-15);
  EXPECT_NEAR(s.recall, 0.4, 1e-15);
  EXPECT_NEAR(s.f1, 2.0 * 0.8 * 0.4 / 1.2, 1e-15);
  EXPECT_NEAR(s.f1, 0.5333, 1e-4);
  EXPECT_DOUBLE_EQ(temporal_overlap_f1(std::vector<std::size_t>{}, std::vector<std::size_t>{}).f1, 1.0);
  EXPECT_DOUBLE_EQ(temporal_overlap_f1(std::vector<std::size_t>{}, std::vector<std::size_t>{1}).f1, 0.0);
}

TEST(TemporalOverlap, AveragesOverUsers) {
  const std::vector<std::size_t> sys{0, 1, 2, 3};
  const MatchScore s = temporal_overlap_f1(sys, std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}, {10, 11}});
  EXPECT_DOUBLE_EQ(s.f1, 0.5);
}

TEST(ShotScores, Examples) {
  Rng rng(5);
  PolicyParams p = PolicyParams::init({3, 3, 3, 3}, LengthMenu(), rng);
  const Eigen::MatrixXd f = Eigen::MatrixXd::Random(3, 8).cwiseAbs();
  const std::vector<Segment> segs{{0, 3}, {3, 5}};
  for (double v : shot_scores_from_kernel(p, f, segs)) EXPECT_GE(v, 0.0);
  const std::vector<double> scores = shot_scores_from_kernel(p, f, segs);
  for (Eigen::Index i = 0; i < 8; ++i)
    EXPECT_NEAR(scores[static_cast<std::size_t>(i)], (p.W * embed(p, f.col(i))).squaredNorm(), 1e-12);
  p.W.setZero();
  for (double v : shot_scores_from_kernel(p, f, segs)) EXPECT_EQ(v, 0.0);

  PolicyParams id;
  id.V = id.U = id.W = Eigen::MatrixXd::Identity(3, 3);
  id.length_weights = Eigen::MatrixXd::Zero(11, 3);
  id.length_bias = Eigen::VectorXd::Zero(11);
  const Eigen::MatrixXd one = (Eigen::MatrixXd(3, 1) << 2, 0, 0).finished();
  EXPECT_EQ(shot_scores_from_kernel(id, one, {{0, 1}}), std::vector<double>{4.0});
}

TEST(SceneScores, Examples) {
  const std::vector<double> c(6, 0.7);
  for (double v : scene_scores(c, {{0, 2}, {2, 3}, {5, 1}}).scores) EXPECT_DOUBLE_EQ(v, 0.7);
  EXPECT_DOUBLE_EQ(scene_scores({1, 2, 6}, {{0, 3}}).scores[0], 3.0);
  EXPECT_DOUBLE_EQ(scene_scores({1, 3}, {{0, 2}}).scores[0], 2.0);
  EXPECT_DOUBLE_EQ(scene_scores({1, 3}, {{0, 2}}, {1.0, 3.0}).scores[0], 2.5);
  EXPECT_THROW(scene_scores({1, 3}, {{0, 1}, {1, 0}, {1, 1}}), InvalidInput);
  EXPECT_THROW(scene_scores({1, 3}, {{0, 1}}), InvalidInput);
}

TEST(Knapsack, Examples) {
  SceneScoreSet s;
  s.scores = {1, 2};
  s.durations = {3, 4};
  EXPECT_EQ(knapsack_select(s, 4), std::vector<std::size_t>{1});
  EXPECT_EQ(knapsack_select(s, 7), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(knapsack_select(s, 100), (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(knapsack_select(s, 2).empty());
  EXPECT_THROW(knapsack_select(s, 0), InvalidInput);
}

TEST(Knapsack, TieBreaks) {
  SceneScoreSet s;
  s.scores = {1, 1, 2};
  s.durations = {1, 1, 2};
  EXPECT_EQ(knapsack_select(s, 2), std::vector<std::size_t>{2});
  s.scores = {2, 2};
  s.durations = {1, 1};
  EXPECT_EQ(knapsack_select(s, 1), std::vector<std::size_t>{0});
}

TEST(Knapsack, MatchesBruteForce) {
  Rng rng(6);
  for (int t = 0; t < 300; ++t) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(0, 15));
    SceneScoreSet s;
    std::vector<long> w;
    for (std::size_t i = 0; i < n; ++i) {
      s.scores.push_back(rng.uniform(0.0, 5.0));
      w.push_back(static_cast<long>(rng.uniform_int(1, 20)));
      s.durations.push_back(static_cast<double>(w.back()));
    }
    const long cap = static_cast<long>(rng.uniform_int(1, 80));
    const std::vector<std::size_t> got = knapsack_select(s, static_cast<double>(cap));
    double score = 0.0;
    long weight = 0;
    for (std::size_t i : got) {
      score += s.scores[i];
      weight += w[i];
    }
    EXPECT_LE(weight, cap);
    EXPECT_NEAR(score, oracle::brute_force_knapsack(s.scores, w, cap), 1e-9);
    EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
  }
}

TEST(KnapsackSummary, ExpandsScenesToShots) {
  const std::vector<double> scores{0.1, 0.1, 0.9, 0.9, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1};
  const std::vector<Segment> scenes{{0, 2}, {2, 2}, {4, 6}, {10, 4}};
  EXPECT_EQ(knapsack_summary(scores, scenes, 5.0, 0.15), (std::vector<std::size_t>{2, 3}));
  EXPECT_TRUE(knapsack_summary(scores, scenes, 5.0, 0.01).empty());
}

}  // namespace
}  // namespace dyseqdpp
