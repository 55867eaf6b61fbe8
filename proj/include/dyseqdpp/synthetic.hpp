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

// Planted-event videos with a known oracle summary.
//
// A video is a sequence of events. Each event is a run of shots drawn around
// one cluster center; events have uniformly random lengths. Some clusters
// recur later in the video, always far from their previous occurrence, and
// every occurrence contributes its medoid shot to the oracle. Concept vectors
// are a per-cluster random bit pattern, so the oracle scores F1 = 1 against
// itself under the concept-matching metric.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dyseqdpp/dataset.hpp"
#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/random.hpp"

namespace dyseqdpp {

struct SynthSpec {
  int num_events = 8;
  int event_length_min = 3;
  int event_length_max = 15;
  int feature_dim = 64;
  double within_event_spread = 0.25;
  double cross_event_separation = 1.0;
  bool repeat_far_events = true;
  // Minimum number of shots between the end of an occurrence of a cluster
  // and the start of its next occurrence.
  int repeat_min_gap = 16;
  int concept_dim = kDefaultConceptDim;
  double shot_duration_seconds = kDefaultShotDurationSeconds;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_events < 1) throw InvalidInput("num_events must be positive");
    if (event_length_min < 1 || event_length_max < event_length_min) throw InvalidInput("invalid event length range");
    if (feature_dim < 1) throw InvalidInput("feature_dim must be positive");
    if (!(within_event_spread > 0.0) || !(cross_event_separation > 0.0)) throw InvalidInput("spread and separation must be positive");
    if (!(within_event_spread < cross_event_separation)) throw InvalidInput("within-event spread must be smaller than cross-event separation");
    if (repeat_min_gap < 0) throw InvalidInput("repeat gap must be non-negative");
    if (concept_dim < 1) throw InvalidInput("concept_dim must be positive");
    if (!(shot_duration_seconds > 0.0)) throw InvalidInput("shot duration must be positive");
  }
};

struct SynthEvent {
  int cluster = 0;
  Segment shots;
  std::size_t medoid = 0;
};

namespace detail {

inline Eigen::VectorXd random_direction(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return v / v.norm();
}

}  // namespace detail

// Generates one video; also reports the planted events when `events` is set.
inline VideoRecord generate_synthetic(const SynthSpec& spec, std::vector<SynthEvent>* events = nullptr) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {0x5e11}));

  // Event layout: choose a cluster per event, reusing a cluster only when its
  // last occurrence ended at least repeat_min_gap shots earlier.
  std::vector<SynthEvent> layout;
  std::vector<std::size_t> last_end;  // per cluster
  std::size_t at = 0;
  for (int e = 0; e < spec.num_events; ++e) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(spec.event_length_min, spec.event_length_max));
    std::vector<int> eligible;
    if (spec.repeat_far_events) {
      for (std::size_t c = 0; c < last_end.size(); ++c)
        if (at >= last_end[c] + static_cast<std::size_t>(spec.repeat_min_gap)) eligible.push_back(static_cast<int>(c));
    }
    int cluster;
    if (!eligible.empty() && rng.uniform() < 1.0 / 3.0) {
      cluster = eligible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))];
    } else {
      cluster = static_cast<int>(last_end.size());
      last_end.push_back(0);
    }
    layout.push_back({cluster, {at, len}, 0});
    at += len;
    last_end[static_cast<std::size_t>(cluster)] = at;
  }
  const std::size_t num_shots = at;
  const std::size_t num_clusters = last_end.size();

  const double radius = spec.cross_event_separation / std::sqrt(2.0);
  std::vector<Eigen::VectorXd> centers;
  std::vector<ConceptVector> patterns;
  for (std::size_t c = 0; c < num_clusters; ++c) {
    centers.push_back(radius * detail::random_direction(spec.feature_dim, rng));
    ConceptVector bits(static_cast<std::size_t>(spec.concept_dim));
    for (auto& b : bits) b = rng.uniform() < 0.5 ? 1 : 0;
    patterns.push_back(std::move(bits));
  }

  VideoRecord v;
  v.id = "synth-" + std::to_string(spec.seed);
  v.shot_duration_seconds = spec.shot_duration_seconds;
  v.features.resize(spec.feature_dim, static_cast<Eigen::Index>(num_shots));
  std::vector<ConceptVector> concepts(num_shots);
  std::vector<Segment> scenes;
  std::vector<std::size_t> oracle;
  const double noise_scale = spec.within_event_spread / std::sqrt(static_cast<double>(spec.feature_dim));
  for (auto& ev : layout) {
    const Eigen::VectorXd& center = centers[static_cast<std::size_t>(ev.cluster)];
    for (std::size_t i = ev.shots.start; i < ev.shots.end(); ++i) {
      for (int r = 0; r < spec.feature_dim; ++r)
        v.features(r, static_cast<Eigen::Index>(i)) = static_cast<float>(center(r) + noise_scale * rng.normal());
      concepts[i] = patterns[static_cast<std::size_t>(ev.cluster)];
    }
    const Eigen::MatrixXd block = v.features.middleCols(static_cast<Eigen::Index>(ev.shots.start),
                                                        static_cast<Eigen::Index>(ev.shots.length));
    const Eigen::VectorXd mean = block.rowwise().mean();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      const double d = (block.col(c) - mean).squaredNorm();
      if (d < best) {
        best = d;
        ev.medoid = ev.shots.start + static_cast<std::size_t>(c);
      }
    }
    oracle.push_back(ev.medoid);
    scenes.push_back(ev.shots);
  }
  v.user_summaries = {oracle};
  v.oracle_summary = oracle;
  v.concepts = std::move(concepts);
  v.scene_boundaries = std::move(scenes);
  if (events) *events = layout;
  return v;
}

// `count` videos whose seeds are derived from `spec.seed`.
inline std::vector<VideoRecord> generate_corpus(SynthSpec spec, std::size_t count) {
  std::vector<VideoRecord> out;
  const std::uint64_t master = spec.seed;
  for (std::size_t i = 0; i < count; ++i) {
    spec.seed = derive_seed(master, {0xc0, i});
    VideoRecord v = generate_synthetic(spec);
    v.id = "synth-" + std::to_string(master) + "-" + std::to_string(i);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace dyseqdpp
