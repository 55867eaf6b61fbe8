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

// Summarization as a sequential decision process.
//
// At step t the agent sees the shots selected so far and the current segment
// [start, start + length). It picks a subset of the segment from the
// conditional DPP whose ground set is (previous step's selection) + (segment),
// conditioned on the previous selection, and then proposes the next segment's
// length from the length softmax. Transitions are deterministic.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dyseqdpp/dpp.hpp"
#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/kernel_net.hpp"
#include "dyseqdpp/random.hpp"

namespace dyseqdpp {

inline constexpr int kInitialSegmentLength = 10;

enum class PhiMode { ConcatCurrent, PoolSeg, PoolVideo };

// Dynamic: the length head proposes every segment length.
// Fixed(l): the length proposal is a point mass on l and the first segment
// also has length l, which yields a uniform partition.
struct PolicyKind {
  enum class Variant { Dynamic, Fixed };
  Variant variant = Variant::Dynamic;
  int fixed_length = 0;

  static PolicyKind dynamic() { return {}; }
  static PolicyKind fixed(int length) { return {Variant::Fixed, length}; }
  bool is_fixed() const { return variant == Variant::Fixed; }
};

struct PolicyConfig {
  PolicyKind kind;
  PhiMode phi = PhiMode::ConcatCurrent;
  int initial_length = kInitialSegmentLength;

  int first_segment_length() const { return kind.is_fixed() ? kind.fixed_length : initial_length; }
};

enum class RolloutMode { Stochastic, Greedy };

struct Segment {
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t end() const { return start + length; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SummaryState {
  std::vector<std::size_t> selected;  // all shots chosen before this step
  std::vector<std::size_t> previous;  // shots chosen at the previous step
  Segment segment;
  int step = 1;
  friend bool operator==(const SummaryState&, const SummaryState&) = default;
};

struct SummaryAction {
  std::vector<std::size_t> subset;  // sorted global shot indices
  int next_length = 0;
  friend bool operator==(const SummaryAction&, const SummaryAction&) = default;
};

struct TrajectoryStep {
  SummaryState state;
  SummaryAction action;
  double log_prob_subset = 0.0;
  double log_prob_length = 0.0;
  double reward = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;

  std::size_t size() const { return steps.size(); }

  // Union of all selected shots, increasing.
  std::vector<std::size_t> summary() const {
    std::vector<std::size_t> out;
    for (const auto& s : steps) out.insert(out.end(), s.action.subset.begin(), s.action.subset.end());
    return out;
  }

  // Selected shots up to and including step index `upto` (0-based).
  std::vector<std::size_t> summary_through(std::size_t upto) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i <= upto && i < steps.size(); ++i)
      out.insert(out.end(), steps[i].action.subset.begin(), steps[i].action.subset.end());
    return out;
  }

  double log_prob() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.log_prob_subset + st.log_prob_length;
    return s;
  }
};

// The fixed starting point: nothing selected, first segment [0, min(l0, n)),
// and the notional initial action (empty subset, l0).
inline std::pair<SummaryState, SummaryAction> initial_state(std::size_t video_len,
                                                            int first_length = kInitialSegmentLength) {
  if (video_len == 0) throw InvalidInput("video has no shots");
  if (first_length < 1) throw InvalidInput("initial segment length must be positive");
  SummaryState s;
  s.segment = {0, std::min<std::size_t>(static_cast<std::size_t>(first_length), video_len)};
  s.step = 1;
  return {s, SummaryAction{{}, first_length}};
}

// Next state, or nullopt once the current segment reaches the end of the
// video. The next segment is clamped to the remaining shots.
inline std::optional<SummaryState> transition(const SummaryState& s, const SummaryAction& a, std::size_t video_len) {
  for (std::size_t i = 0; i < a.subset.size(); ++i) {
    if (a.subset[i] < s.segment.start || a.subset[i] >= s.segment.end())
      throw InvalidAction("selected shot " + std::to_string(a.subset[i]) + " lies outside the current segment");
    if (i > 0 && a.subset[i] <= a.subset[i - 1]) throw InvalidAction("selected shots must be strictly increasing");
  }
  if (a.next_length < 1) throw InvalidAction("proposed segment length must be positive");
  if (s.segment.end() > video_len) throw InvalidAction("state segment exceeds the video");
  if (s.segment.end() == video_len) return std::nullopt;
  SummaryState next;
  next.selected = s.selected;
  next.selected.insert(next.selected.end(), a.subset.begin(), a.subset.end());
  next.previous = a.subset;
  next.segment.start = s.segment.end();
  next.segment.length = std::min<std::size_t>(static_cast<std::size_t>(a.next_length), video_len - next.segment.start);
  next.step = s.step + 1;
  return next;
}

// Ground set of one step: previous selections first, then the segment.
struct StepGround {
  std::vector<std::size_t> items;
  Eigen::MatrixXd features;
  Subset previous = 0;  // local mask of the previous selections
  std::size_t num_previous = 0;

  Subset to_local(const std::vector<std::size_t>& subset, const Segment& seg) const {
    Subset out = 0;
    for (std::size_t g : subset) {
      if (g < seg.start || g >= seg.end()) throw InvalidAction("subset outside segment");
      out |= Subset{1} << (num_previous + (g - seg.start));
    }
    return out;
  }

  std::vector<std::size_t> to_global(Subset local) const {
    std::vector<std::size_t> out;
    for (int i : subset_members(local)) out.push_back(items[static_cast<std::size_t>(i)]);
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline StepGround step_ground(const Eigen::MatrixXd& video_features, const SummaryState& s) {
  if (s.segment.length == 0 || s.segment.end() > static_cast<std::size_t>(video_features.cols()))
    throw InvalidInput("segment lies outside the video");
  if (s.segment.length > static_cast<std::size_t>(kMaxEnumerable))
    throw CapacityExceeded("segment longer than " + std::to_string(kMaxEnumerable) + " shots");
  StepGround g;
  g.num_previous = s.previous.size();
  g.items = s.previous;
  for (std::size_t i = s.segment.start; i < s.segment.end(); ++i) g.items.push_back(i);
  if (g.items.size() > static_cast<std::size_t>(kMaxGroundSet)) throw CapacityExceeded("step ground set too large");
  g.features.resize(video_features.rows(), static_cast<Eigen::Index>(g.items.size()));
  for (std::size_t c = 0; c < g.items.size(); ++c)
    g.features.col(static_cast<Eigen::Index>(c)) = video_features.col(static_cast<Eigen::Index>(g.items[c]));
  g.previous = full_subset(static_cast<int>(g.num_previous));
  return g;
}

inline Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

// Features fed to the length head once `chosen` has been selected at state s.
inline Eigen::VectorXd pooled_features(PhiMode mode, const Eigen::MatrixXd& video_features, const SummaryState& s,
                                       const std::vector<std::size_t>& chosen) {
  const Eigen::MatrixXd segment = video_features.middleCols(static_cast<Eigen::Index>(s.segment.start),
                                                            static_cast<Eigen::Index>(s.segment.length));
  switch (mode) {
    case PhiMode::PoolSeg:
      return phi_pool(Eigen::MatrixXd(video_features.rows(), 0), segment);
    case PhiMode::PoolVideo:
      return phi_pool(Eigen::MatrixXd(video_features.rows(), 0),
                      video_features.leftCols(static_cast<Eigen::Index>(s.segment.end())));
    case PhiMode::ConcatCurrent:
    default: {
      std::vector<std::size_t> summary = s.selected;
      summary.insert(summary.end(), chosen.begin(), chosen.end());
      return phi_pool(gather_columns(video_features, summary), segment);
    }
  }
}

// Log-probability of the subset factor, or nullopt when the conditioning set
// itself has zero volume (the conditional law is undefined and the step is
// treated as a forced empty selection).
inline std::optional<double> subset_log_prob(const LKernel& kernel, const StepGround& g, Subset local) {
  if (g.num_previous > 0 && psd_principal_det(kernel.matrix(), g.previous) <= 0.0) return std::nullopt;
  return detail::log_cond_from_kernel(kernel, local, g.previous);
}

// Full joint law of one step's action, materialized for verification.
struct PolicyDistribution {
  std::vector<std::size_t> ground_items;
  SubsetDistribution subsets;     // free items are the segment
  std::vector<int> lengths;       // candidate next lengths
  Eigen::MatrixXd length_probs;   // row: compact subset index, col: lengths

  double joint(std::size_t compact, std::size_t k) const { return subsets.probs[compact] * length_probs(static_cast<Eigen::Index>(compact), static_cast<Eigen::Index>(k)); }

  double total() const {
    double s = 0.0;
    for (std::size_t c = 0; c < subsets.probs.size(); ++c)
      for (std::size_t k = 0; k < lengths.size(); ++k) s += joint(c, k);
    return s;
  }

  std::vector<std::size_t> global_subset(std::size_t compact) const {
    std::vector<std::size_t> out;
    for (int i : subset_members(subsets.expand(compact))) out.push_back(ground_items[static_cast<std::size_t>(i)]);
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline PolicyDistribution policy_distribution(const PolicyParams& params, const PolicyConfig& config,
                                              const Eigen::MatrixXd& video_features, const SummaryState& s) {
  const StepGround g = step_ground(video_features, s);
  const LKernel kernel = build_kernel(params, g.features);
  PolicyDistribution pd;
  pd.ground_items = g.items;
  if (g.num_previous > 0 && psd_principal_det(kernel.matrix(), g.previous) <= 0.0) {
    pd.subsets.conditioned = g.previous;
    for (std::size_t i = g.num_previous; i < g.items.size(); ++i) pd.subsets.free_items.push_back(static_cast<int>(i));
    pd.subsets.probs.assign(std::size_t{1} << pd.subsets.free_items.size(), 0.0);
    pd.subsets.probs[0] = 1.0;
  } else {
    pd.subsets = enumerate_distribution(kernel, g.previous);
  }
  const std::size_t n_sub = pd.subsets.probs.size();
  if (config.kind.is_fixed()) {
    pd.lengths = {config.kind.fixed_length};
    pd.length_probs = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n_sub), 1);
    return pd;
  }
  pd.lengths = params.menu.lengths();
  pd.length_probs.resize(static_cast<Eigen::Index>(n_sub), static_cast<Eigen::Index>(pd.lengths.size()));
  for (std::size_t c = 0; c < n_sub; ++c) {
    const Eigen::VectorXd pooled = pooled_features(config.phi, video_features, s, pd.global_subset(c));
    pd.length_probs.row(static_cast<Eigen::Index>(c)) = length_distribution(params, pooled).transpose();
  }
  return pd;
}

struct StepDecision {
  SummaryAction action;
  double log_prob_subset = 0.0;
  double log_prob_length = 0.0;
};

namespace detail {

inline void check_policy(const PolicyParams& params, const PolicyConfig& config) {
  if (config.kind.is_fixed() && !params.menu.contains(config.kind.fixed_length))
    throw InvalidLength("fixed segment length " + std::to_string(config.kind.fixed_length) + " is not in the menu");
  if (config.initial_length < 1) throw InvalidInput("initial segment length must be positive");
}

inline std::size_t argmax_first(const Eigen::VectorXd& p) {
  std::size_t best = 0;
  for (Eigen::Index k = 1; k < p.size(); ++k)
    if (p(k) > p(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(k);
  return best;
}

inline std::size_t sample_index(const Eigen::VectorXd& p, Rng& rng) {
  const double u = rng.uniform() * p.sum();
  double acc = 0.0;
  std::size_t last = 0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) <= 0.0) continue;
    acc += p(k);
    last = static_cast<std::size_t>(k);
    if (u < acc) return last;
  }
  return last;
}

}  // namespace detail

// Draws the subset from the exact conditional DPP, then the next length from
// the softmax conditioned on that subset.
inline StepDecision sample_action(const PolicyParams& params, const PolicyConfig& config,
                                  const Eigen::MatrixXd& video_features, const SummaryState& s, Rng& rng) {
  detail::check_policy(params, config);
  const StepGround g = step_ground(video_features, s);
  const LKernel kernel = build_kernel(params, g.features);
  StepDecision d;
  Subset local = 0;
  const bool degenerate = g.num_previous > 0 && psd_principal_det(kernel.matrix(), g.previous) <= 0.0;
  if (!degenerate) {
    local = sample_conditional(kernel, g.previous, rng);
    d.log_prob_subset = detail::log_cond_from_kernel(kernel, local, g.previous);
  }
  d.action.subset = g.to_global(local);
  if (config.kind.is_fixed()) {
    d.action.next_length = config.kind.fixed_length;
    return d;
  }
  const Eigen::VectorXd pooled = pooled_features(config.phi, video_features, s, d.action.subset);
  const Eigen::VectorXd probs = length_distribution(params, pooled);
  const std::size_t k = detail::sample_index(probs, rng);
  d.action.next_length = params.menu[k];
  d.log_prob_length = log_length_prob(params, pooled, d.action.next_length);
  return d;
}

// MAP subset (smallest bitmask on ties), then the most likely length given it
// (smallest length on ties).
inline StepDecision greedy_action(const PolicyParams& params, const PolicyConfig& config,
                                  const Eigen::MatrixXd& video_features, const SummaryState& s) {
  detail::check_policy(params, config);
  const StepGround g = step_ground(video_features, s);
  const LKernel kernel = build_kernel(params, g.features);
  StepDecision d;
  Subset local = 0;
  const bool degenerate = g.num_previous > 0 && psd_principal_det(kernel.matrix(), g.previous) <= 0.0;
  if (!degenerate) {
    local = map_subset(enumerate_distribution(kernel, g.previous));
    d.log_prob_subset = detail::log_cond_from_kernel(kernel, local, g.previous);
  }
  d.action.subset = g.to_global(local);
  if (config.kind.is_fixed()) {
    d.action.next_length = config.kind.fixed_length;
    return d;
  }
  const Eigen::VectorXd pooled = pooled_features(config.phi, video_features, s, d.action.subset);
  d.action.next_length = params.menu[detail::argmax_first(length_distribution(params, pooled))];
  d.log_prob_length = log_length_prob(params, pooled, d.action.next_length);
  return d;
}

// Runs the policy from the initial state until the video is covered. Rewards
// are left at zero.
inline Trajectory rollout(const PolicyParams& params, const PolicyConfig& config, const Eigen::MatrixXd& video_features,
                          RolloutMode mode, Rng& rng) {
  detail::check_policy(params, config);
  const auto n = static_cast<std::size_t>(video_features.cols());
  auto [state, a0] = initial_state(n, config.first_segment_length());
  Trajectory tau;
  for (;;) {
    const StepDecision d = mode == RolloutMode::Greedy ? greedy_action(params, config, video_features, state)
                                                       : sample_action(params, config, video_features, state, rng);
    tau.steps.push_back({state, d.action, d.log_prob_subset, d.log_prob_length, 0.0});
    auto next = transition(state, d.action, n);
    if (!next) break;
    state = std::move(*next);
  }
  return tau;
}

// Checks that the trajectory starts at the initial state and follows the
// deterministic transitions to termination.
inline void validate_trajectory(const PolicyParams& params, const PolicyConfig& config, std::size_t video_len,
                                const Trajectory& tau) {
  if (tau.steps.empty()) throw InvalidTrajectory("trajectory has no steps");
  SummaryState expected = initial_state(video_len, config.first_segment_length()).first;
  for (std::size_t i = 0; i < tau.steps.size(); ++i) {
    const auto& st = tau.steps[i];
    if (!(st.state == expected)) throw InvalidTrajectory("step " + std::to_string(i + 1) + " state does not follow from its predecessor");
    if (config.kind.is_fixed() ? st.action.next_length != config.kind.fixed_length
                               : !params.menu.contains(st.action.next_length))
      throw InvalidTrajectory("step " + std::to_string(i + 1) + " proposes an inadmissible length");
    std::optional<SummaryState> next;
    try {
      next = transition(st.state, st.action, video_len);
    } catch (const InvalidAction& e) {
      throw InvalidTrajectory("step " + std::to_string(i + 1) + ": " + e.what());
    }
    if (!next) {
      if (i + 1 != tau.steps.size()) throw InvalidTrajectory("trajectory continues past the end of the video");
      return;
    }
    expected = std::move(*next);
  }
  throw InvalidTrajectory("trajectory stops before covering the video");
}

// Per-step log-probabilities re-evaluated under `params`.
inline std::pair<double, double> step_log_probs(const PolicyParams& params, const PolicyConfig& config,
                                                const Eigen::MatrixXd& video_features, const TrajectoryStep& st) {
  const StepGround g = step_ground(video_features, st.state);
  const LKernel kernel = build_kernel(params, g.features);
  const Subset local = g.to_local(st.action.subset, st.state.segment);
  const std::optional<double> lp = subset_log_prob(kernel, g, local);
  double lp_len = 0.0;
  if (!config.kind.is_fixed())
    lp_len = log_length_prob(params, pooled_features(config.phi, video_features, st.state, st.action.subset),
                             st.action.next_length);
  return {lp.value_or(0.0), lp_len};
}

// log p(tau) = sum_t [log P(x_t | s_t) + log P(l_t | x_t, s_t)]; the initial
// state/action and the transitions carry no parameter dependence.
inline double log_prob_trajectory(const PolicyParams& params, const PolicyConfig& config,
                                  const Eigen::MatrixXd& video_features, const Trajectory& tau) {
  validate_trajectory(params, config, static_cast<std::size_t>(video_features.cols()), tau);
  double total = 0.0;
  for (const auto& st : tau.steps) {
    const auto [a, b] = step_log_probs(params, config, video_features, st);
    total += a + b;
  }
  return total;
}

// Gradient of one step's log pi(a_t | s_t). Steps whose subset has zero
// probability (possible only for forced trajectories) or whose conditioning
// set is degenerate contribute no subset term.
inline ParamGradient grad_log_policy_step(const PolicyParams& params, const PolicyConfig& config,
                                          const Eigen::MatrixXd& video_features, const TrajectoryStep& st) {
  const StepGround g = step_ground(video_features, st.state);
  const Subset local = g.to_local(st.action.subset, st.state.segment);
  ParamGradient grad = ParamGradient::zeros_like(params);
  const LKernel kernel = build_kernel(params, g.features);
  const std::optional<double> lp = subset_log_prob(kernel, g, local);
  if (lp && std::isfinite(*lp)) grad.add_scaled(grad_log_cond_prob(params, g.features, local, g.previous), 1.0);
  if (!config.kind.is_fixed()) {
    const Eigen::VectorXd pooled = pooled_features(config.phi, video_features, st.state, st.action.subset);
    grad.add_scaled(grad_log_length_prob(params, pooled, st.action.next_length), 1.0);
  }
  return grad;
}

inline ParamGradient grad_log_prob_trajectory(const PolicyParams& params, const PolicyConfig& config,
                                              const Eigen::MatrixXd& video_features, const Trajectory& tau) {
  ParamGradient grad = ParamGradient::zeros_like(params);
  for (const auto& st : tau.steps) grad.add_scaled(grad_log_policy_step(params, config, video_features, st), 1.0);
  return grad;
}

// One line per step with a fixed field order.
inline void write_trajectory_dump(std::ostream& out, const Trajectory& tau) {
  char buf[96];
  for (const auto& st : tau.steps) {
    out << "step=" << st.state.step << " segment=" << st.state.segment.start << ':' << st.state.segment.end()
        << " subset=";
    for (std::size_t i = 0; i < st.action.subset.size(); ++i) out << (i ? "," : "") << st.action.subset[i];
    if (st.action.subset.empty()) out << '-';
    out << " next_len=" << st.action.next_length;
    std::snprintf(buf, sizeof buf, " log_p_subset=%.17g log_p_length=%.17g reward=%.17g", st.log_prob_subset,
                  st.log_prob_length, st.reward);
    out << buf << '\n';
  }
}

}  // namespace dyseqdpp
