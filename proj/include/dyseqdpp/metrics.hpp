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

// Summary evaluation.
//
// Two protocols are provided:
//  * Concept matching: a bipartite graph between system and user shots whose
//    edges join shots at most K steps apart, weighted by concept similarity
//    1 - hamming / C. The matching size is the total weight of a maximum
//    weight matching; precision and recall divide it by the summary sizes.
//  * Scene knapsack: shot scores are averaged per scene, scenes are chosen by
//    an exact 0/1 knapsack under a duration budget, and the chosen shots are
//    compared to user summaries by temporal overlap.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/kernel_net.hpp"
#include "dyseqdpp/seq_model.hpp"

namespace dyseqdpp {

inline constexpr int kDefaultConceptDim = 54;
inline constexpr double kDefaultBudgetFraction = 0.15;

using ConceptVector = std::vector<std::uint8_t>;

struct MatchScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double size = 0.0;  // matched weight (or overlap count)
  std::vector<std::pair<std::size_t, std::size_t>> matching;  // (system shot, user shot)
};

inline double f1_from(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline int hamming(const ConceptVector& a, const ConceptVector& b) {
  if (a.size() != b.size())
    throw ShapeError("concept vectors differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != 0) != (b[i] != 0);
  return d;
}

// Maximum-weight assignment on a rectangular non-negative weight matrix.
// Returns, for each row, the matched column or -1. Hungarian algorithm with
// potentials on the square zero-padded cost matrix -weights.
inline std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const auto rows = static_cast<int>(weights.rows());
  const auto cols = static_cast<int>(weights.cols());
  const int n = std::max(rows, cols);
  std::vector<int> row_match(static_cast<std::size_t>(rows), -1);
  if (n == 0) return row_match;
  auto cost = [&](int i, int j) { return (i < rows && j < cols) ? -weights(i, j) : 0.0; };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<std::size_t>(j)] - 1;
    if (i >= 0 && i < rows && j - 1 < cols) row_match[static_cast<std::size_t>(i)] = j - 1;
  }
  return row_match;
}

struct MatchConfig {
  enum class Mode { Weighted, Cardinality };
  std::optional<int> window;  // nullopt: no temporal pruning
  Mode mode = Mode::Weighted;
  int hamming_threshold = 0;  // cardinality mode: edge iff hamming <= threshold
};

namespace detail {

inline MatchScore score_from_size(double size, std::size_t n_system, std::size_t n_user) {
  MatchScore s;
  s.size = size;
  if (n_system == 0 && n_user == 0) {
    s.precision = s.recall = s.f1 = 1.0;
    return s;
  }
  if (n_system == 0 || n_user == 0) return s;
  s.precision = size / static_cast<double>(n_system);
  s.recall = size / static_cast<double>(n_user);
  s.f1 = f1_from(s.precision, s.recall);
  return s;
}

}  // namespace detail

// Edge weight between two shots, or 0 when there is no edge.
inline double match_weight(std::size_t sys_shot, std::size_t user_shot, const std::vector<ConceptVector>& concepts,
                           const MatchConfig& config) {
  const auto gap = sys_shot > user_shot ? sys_shot - user_shot : user_shot - sys_shot;
  if (config.window && gap > static_cast<std::size_t>(std::max(*config.window, 0))) return 0.0;
  const ConceptVector& a = concepts[sys_shot];
  const int h = hamming(a, concepts[user_shot]);
  if (config.mode == MatchConfig::Mode::Cardinality) return h <= config.hamming_threshold ? 1.0 : 0.0;
  if (a.empty()) return 1.0;
  return 1.0 - static_cast<double>(h) / static_cast<double>(a.size());
}

inline MatchScore bipartite_match_f1(const std::vector<std::size_t>& system, const std::vector<std::size_t>& user,
                                     const std::vector<ConceptVector>& concepts, const MatchConfig& config = {}) {
  for (std::size_t s : system)
    if (s >= concepts.size()) throw InvalidInput("system shot " + std::to_string(s) + " has no concept vector");
  for (std::size_t u : user)
    if (u >= concepts.size()) throw InvalidInput("user shot " + std::to_string(u) + " has no concept vector");
  Eigen::MatrixXd w(static_cast<Eigen::Index>(system.size()), static_cast<Eigen::Index>(user.size()));
  for (std::size_t i = 0; i < system.size(); ++i)
    for (std::size_t j = 0; j < user.size(); ++j)
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = match_weight(system[i], user[j], concepts, config);
  const std::vector<int> assign = max_weight_assignment(w);
  double size = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] < 0) continue;
    const double wij = w(static_cast<Eigen::Index>(i), assign[i]);
    if (wij <= 0.0) continue;
    size += wij;
    pairs.emplace_back(system[i], user[static_cast<std::size_t>(assign[i])]);
  }
  MatchScore s = detail::score_from_size(size, system.size(), user.size());
  s.matching = std::move(pairs);
  return s;
}

// Precision/recall/F1 of exact index overlap.
inline MatchScore temporal_overlap_f1(std::vector<std::size_t> system, std::vector<std::size_t> user) {
  std::sort(system.begin(), system.end());
  system.erase(std::unique(system.begin(), system.end()), system.end());
  std::sort(user.begin(), user.end());
  user.erase(std::unique(user.begin(), user.end()), user.end());
  std::vector<std::size_t> common;
  std::set_intersection(system.begin(), system.end(), user.begin(), user.end(), std::back_inserter(common));
  MatchScore s = detail::score_from_size(static_cast<double>(common.size()), system.size(), user.size());
  for (std::size_t c : common) s.matching.emplace_back(c, c);
  return s;
}

// Mean precision, recall and F1 over several reference summaries.
inline MatchScore average_scores(const std::vector<MatchScore>& scores) {
  MatchScore out;
  if (scores.empty()) return out;
  for (const auto& s : scores) {
    out.precision += s.precision;
    out.recall += s.recall;
    out.f1 += s.f1;
    out.size += s.size;
  }
  const auto n = static_cast<double>(scores.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  out.size /= n;
  return out;
}

inline MatchScore temporal_overlap_f1(const std::vector<std::size_t>& system,
                                      const std::vector<std::vector<std::size_t>>& users) {
  std::vector<MatchScore> per_user;
  for (const auto& u : users) per_user.push_back(temporal_overlap_f1(system, u));
  return average_scores(per_user);
}

// Diagonal of each segment's kernel: the squared norm of W z_i per shot.
inline std::vector<double> shot_scores_from_kernel(const PolicyParams& params, const Eigen::MatrixXd& video_features,
                                                   const std::vector<Segment>& segments) {
  std::vector<double> scores(static_cast<std::size_t>(video_features.cols()), 0.0);
  for (const Segment& seg : segments) {
    if (seg.end() > static_cast<std::size_t>(video_features.cols())) throw InvalidInput("segment outside video");
    if (seg.length == 0) continue;
    const KernelForward fw = kernel_forward(
        params, video_features.middleCols(static_cast<Eigen::Index>(seg.start), static_cast<Eigen::Index>(seg.length)));
    for (std::size_t i = 0; i < seg.length; ++i)
      scores[seg.start + i] = std::max(fw.kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)), 0.0);
  }
  return scores;
}

struct SceneScoreSet {
  std::vector<Segment> scenes;
  std::vector<double> scores;
  std::vector<double> durations;  // seconds
};

inline void validate_scenes(const std::vector<Segment>& scenes, std::size_t num_shots) {
  std::size_t at = 0;
  for (const auto& sc : scenes) {
    if (sc.length == 0) throw InvalidInput("empty scene");
    if (sc.start != at) throw InvalidInput("scenes must be disjoint, consecutive and start at shot 0");
    at = sc.end();
  }
  if (at != num_shots) throw InvalidInput("scenes do not cover the video");
}

// Per-scene mean of shot scores, weighted by per-shot durations (uniform
// when `shot_durations` is empty).
inline SceneScoreSet scene_scores(const std::vector<double>& shot_scores, const std::vector<Segment>& scenes,
                                  const std::vector<double>& shot_durations = {}, double uniform_duration = 1.0) {
  validate_scenes(scenes, shot_scores.size());
  if (!shot_durations.empty() && shot_durations.size() != shot_scores.size())
    throw ShapeError("one duration per shot is required");
  SceneScoreSet out;
  out.scenes = scenes;
  for (const auto& sc : scenes) {
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = sc.start; i < sc.end(); ++i) {
      const double w = shot_durations.empty() ? uniform_duration : shot_durations[i];
      wsum += w;
      acc += w * shot_scores[i];
    }
    out.scores.push_back(wsum > 0.0 ? acc / wsum : 0.0);
    out.durations.push_back(wsum);
  }
  return out;
}

// Exact 0/1 knapsack over integer-second durations. Among optimal selections
// prefers fewer scenes, then the lexicographically smallest index list.
inline std::vector<std::size_t> knapsack_select(const SceneScoreSet& scenes, double budget_seconds) {
  const std::size_t n = scenes.scores.size();
  if (scenes.durations.size() != n) throw ShapeError("scene scores and durations differ in length");
  if (!(budget_seconds > 0.0)) throw InvalidInput("knapsack budget must be positive");
  const auto capacity = static_cast<std::size_t>(std::floor(budget_seconds + 1e-9));
  std::vector<std::size_t> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = static_cast<std::size_t>(std::max(0L, std::lround(scenes.durations[i])));

  struct Cell {
    double score = 0.0;
    std::size_t count = 0;
  };
  auto better = [](const Cell& a, const Cell& b) {
    const double eps = 1e-12 * std::max({1.0, std::abs(a.score), std::abs(b.score)});
    if (a.score > b.score + eps) return true;
    if (a.score < b.score - eps) return false;
    return a.count < b.count;
  };
  // best[i][c]: optimum over scenes i..n-1 with capacity c.
  std::vector<std::vector<Cell>> best(n + 1, std::vector<Cell>(capacity + 1));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t c = 0; c <= capacity; ++c) {
      Cell skip = best[i + 1][c];
      best[i][c] = skip;
      if (weight[i] <= c) {
        const Cell& rest = best[i + 1][c - weight[i]];
        const Cell take{rest.score + scenes.scores[i], rest.count + 1};
        if (better(take, skip)) best[i][c] = take;
      }
    }
  }
  std::vector<std::size_t> chosen;
  std::size_t c = capacity;
  for (std::size_t i = 0; i < n; ++i) {
    if (weight[i] > c) continue;
    const Cell& rest = best[i + 1][c - weight[i]];
    const Cell take{rest.score + scenes.scores[i], rest.count + 1};
    if (!better(best[i][c], take)) {
      chosen.push_back(i);
      c -= weight[i];
    }
  }
  return chosen;
}

// Shot-level summary from the scene knapsack protocol.
inline std::vector<std::size_t> knapsack_summary(const std::vector<double>& shot_scores,
                                                 const std::vector<Segment>& scenes, double shot_duration_seconds,
                                                 double budget_fraction = kDefaultBudgetFraction) {
  const SceneScoreSet set = scene_scores(shot_scores, scenes, {}, shot_duration_seconds);
  double total = 0.0;
  for (double d : set.durations) total += d;
  std::vector<std::size_t> shots;
  const double budget = budget_fraction * total;
  if (!(budget > 0.0)) return shots;
  for (std::size_t k : knapsack_select(set, budget))
    for (std::size_t i = set.scenes[k].start; i < set.scenes[k].end(); ++i) shots.push_back(i);
  return shots;
}

}  // namespace dyseqdpp
