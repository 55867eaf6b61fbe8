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

// Policy-gradient training.
//
// The objective is J = -E_tau[ sum_t g(t, T) r_t ], with g(t, T) = gamma^(T-t)
// (or the final-step indicator). Its score-function estimate from K sampled
// trajectories is
//
//   grad J ~= -(1/K) sum_k [ sum_t g(t, T_k) r_tk ] grad log p(tau_k),
//   grad log p(tau) = sum_t [ grad log P(x_t | s_t) + grad log P(l_t | x_t, s_t) ].
//
// A per-step surrogate, -sum_t g(t, T) r_t grad log pi(a_t | s_t), is available
// as an alternative weighting.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dyseqdpp/dataset.hpp"
#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/kernel_net.hpp"
#include "dyseqdpp/metrics.hpp"
#include "dyseqdpp/random.hpp"
#include "dyseqdpp/seq_model.hpp"

namespace dyseqdpp {

// g(t, T): gamma^(T - t), or 1 at t = T and 0 before when final_only.
struct Discount {
  bool final_only = true;
  double gamma = 0.0;

  static Discount final_step() { return {}; }
  static Discount geometric(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("discount gamma must lie in (0, 1)");
    return {false, gamma};
  }
};

inline double discount_weight(const Discount& d, int t, int total_steps) {
  if (t < 1 || t > total_steps) throw InvalidInput("discount step index out of range");
  if (d.final_only) return t == total_steps ? 1.0 : 0.0;
  return std::pow(d.gamma, total_steps - t);
}

enum class RewardMode { Full, Partial };
enum class RewardMetric { F1, Precision, Recall };

struct RewardConfig {
  RewardMode mode = RewardMode::Full;
  RewardMetric metric = RewardMetric::F1;
  MatchConfig matcher = {12, MatchConfig::Mode::Weighted, 0};
  Discount discount;
};

inline double pick_metric(const MatchScore& s, RewardMetric m) {
  switch (m) {
    case RewardMetric::Precision:
      return s.precision;
    case RewardMetric::Recall:
      return s.recall;
    case RewardMetric::F1:
    default:
      return s.f1;
  }
}

// Score of the partial system summary after the step whose segment ends at
// `segment_end`, averaged over the user summaries. Partial mode compares
// against each user summary truncated to shots before `segment_end`; an empty
// truncated reference scores 0. Without concept annotations the exact-overlap
// metric is used.
inline double step_reward(const RewardConfig& config, const std::vector<std::size_t>& system_partial,
                          const VideoRecord& video, std::size_t segment_end) {
  if (video.user_summaries.empty()) throw MissingAnnotation("video " + video.id + " has no user summary");
  double acc = 0.0;
  for (const auto& user : video.user_summaries) {
    std::vector<std::size_t> reference;
    if (config.mode == RewardMode::Partial) {
      for (std::size_t u : user)
        if (u < segment_end) reference.push_back(u);
      if (reference.empty()) continue;  // contributes 0
    } else {
      reference = user;
    }
    const MatchScore s = video.concepts ? bipartite_match_f1(system_partial, reference, *video.concepts, config.matcher)
                                        : temporal_overlap_f1(system_partial, reference);
    acc += pick_metric(s, config.metric);
  }
  return acc / static_cast<double>(video.user_summaries.size());
}

// Fills every step's reward from the cumulative summary through that step.
inline void assign_rewards(Trajectory& tau, const RewardConfig& config, const VideoRecord& video) {
  std::vector<std::size_t> partial;
  const int total = static_cast<int>(tau.steps.size());
  for (int t = 1; t <= total; ++t) {
    auto& st = tau.steps[static_cast<std::size_t>(t - 1)];
    partial.insert(partial.end(), st.action.subset.begin(), st.action.subset.end());
    st.reward = (config.discount.final_only && t != total) ? 0.0 : step_reward(config, partial, video, st.state.segment.end());
  }
}

inline double discounted_return(const Trajectory& tau, const Discount& d) {
  const int total = static_cast<int>(tau.steps.size());
  double g = 0.0;
  for (int t = 1; t <= total; ++t) g += discount_weight(d, t, total) * tau.steps[static_cast<std::size_t>(t - 1)].reward;
  return g;
}

enum class Surrogate { TrajectoryReturn, PerStep };

struct TrainConfig {
  int num_trajectories = 8;
  double learning_rate = 1e-3;
  int num_updates = 500;
  std::uint64_t master_seed = 0;
  RolloutMode sampling = RolloutMode::Stochastic;
  bool oracle_forced = false;
  Surrogate surrogate = Surrogate::TrajectoryReturn;
  double clip_norm = 10.0;  // <= 0 disables clipping
  int batch_size = 1;
  int workers = 1;
  double budget_fraction = kDefaultBudgetFraction;

  void validate() const {
    if (num_trajectories < 1) throw InvalidInput("number of trajectories per update must be at least 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidInput("learning rate must be non-negative");
    if (num_updates < 0) throw InvalidInput("number of updates must be non-negative");
    if (batch_size < 1) throw InvalidInput("batch size must be at least 1");
  }
};

// Gradient of the surrogate loss for one trajectory whose rewards are set.
inline ParamGradient surrogate_gradient(const PolicyParams& params, const PolicyConfig& policy,
                                        const Eigen::MatrixXd& features, const Trajectory& tau, const Discount& discount,
                                        Surrogate surrogate) {
  ParamGradient g = ParamGradient::zeros_like(params);
  const int total = static_cast<int>(tau.steps.size());
  if (surrogate == Surrogate::TrajectoryReturn) {
    const double ret = discounted_return(tau, discount);
    if (ret == 0.0) return g;
    for (const auto& st : tau.steps) g.add_scaled(grad_log_policy_step(params, policy, features, st), -ret);
    return g;
  }
  for (int t = 1; t <= total; ++t) {
    const auto& st = tau.steps[static_cast<std::size_t>(t - 1)];
    const double w = discount_weight(discount, t, total) * st.reward;
    if (w != 0.0) g.add_scaled(grad_log_policy_step(params, policy, features, st), -w);
  }
  return g;
}

namespace detail {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
// written to per-index slots so the outcome is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(w);
  for (std::size_t k = 0; k < w; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = k; i < n; i += w) fn(i);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct GradientEstimate {
  ParamGradient grad;
  double mean_return = 0.0;
  double mean_steps = 0.0;
  std::vector<Trajectory> trajectories;
};

// Trajectory whose subsets are forced to the oracle shots of each segment,
// with lengths drawn from (or, in greedy mode, maximized under) the policy.
inline Trajectory forced_rollout(const PolicyParams& params, const PolicyConfig& policy, const Eigen::MatrixXd& features,
                                 const std::vector<std::size_t>& oracle, RolloutMode mode, Rng& rng) {
  detail::check_policy(params, policy);
  const auto n = static_cast<std::size_t>(features.cols());
  SummaryState state = initial_state(n, policy.first_segment_length()).first;
  Trajectory tau;
  for (;;) {
    TrajectoryStep st;
    st.state = state;
    for (std::size_t o : oracle)
      if (o >= state.segment.start && o < state.segment.end()) st.action.subset.push_back(o);
    const StepGround g = step_ground(features, state);
    const LKernel kernel = build_kernel(params, g.features);
    st.log_prob_subset = subset_log_prob(kernel, g, g.to_local(st.action.subset, state.segment)).value_or(0.0);
    if (policy.kind.is_fixed()) {
      st.action.next_length = policy.kind.fixed_length;
    } else {
      const Eigen::VectorXd pooled = pooled_features(policy.phi, features, state, st.action.subset);
      const Eigen::VectorXd probs = length_distribution(params, pooled);
      const std::size_t k = mode == RolloutMode::Greedy ? detail::argmax_first(probs) : detail::sample_index(probs, rng);
      st.action.next_length = params.menu[k];
      st.log_prob_length = log_length_prob(params, pooled, st.action.next_length);
    }
    tau.steps.push_back(st);
    auto next = transition(state, st.action, n);
    if (!next) break;
    state = std::move(*next);
  }
  return tau;
}

// Reward of the scene-knapsack protocol: shot scores are the kernel diagonals
// over the trajectory's segments; the knapsack summary is scored by temporal
// overlap F1 averaged over the user summaries.
inline double knapsack_protocol_reward(const PolicyParams& params, const Eigen::MatrixXd& features,
                                       const VideoRecord& video, const Trajectory& tau, double budget_fraction) {
  if (!video.scene_boundaries) throw MissingAnnotation("video " + video.id + " has no scene boundaries");
  if (video.user_summaries.empty()) throw MissingAnnotation("video " + video.id + " has no user summary");
  std::vector<Segment> segments;
  for (const auto& st : tau.steps) segments.push_back(st.state.segment);
  const std::vector<double> scores = shot_scores_from_kernel(params, features, segments);
  const auto summary = knapsack_summary(scores, *video.scene_boundaries, video.shot_duration_seconds, budget_fraction);
  return temporal_overlap_f1(summary, video.user_summaries).f1;
}

// Sampled estimate of grad J over a batch of videos, K trajectories each.
// Trajectory (b, k) draws from the stream derive_seed(seed, {b, k}).
inline GradientEstimate policy_gradient_estimate(const PolicyParams& params, const PolicyConfig& policy,
                                                 const std::vector<const VideoRecord*>& batch,
                                                 const RewardConfig& reward, const TrainConfig& train,
                                                 std::uint64_t seed, bool keep_trajectories = false) {
  train.validate();
  const std::size_t k_per = static_cast<std::size_t>(train.num_trajectories);
  const std::size_t jobs = batch.size() * k_per;
  std::vector<ParamGradient> grads(jobs);
  std::vector<Trajectory> trajs(jobs);
  std::vector<double> returns(jobs, 0.0);
  detail::parallel_for(jobs, train.workers, [&](std::size_t j) {
    const std::size_t b = j / k_per;
    const std::size_t k = j % k_per;
    const VideoRecord& video = *batch[b];
    Rng rng(derive_seed(seed, {b, k}));
    Trajectory tau;
    if (train.oracle_forced) {
      tau = forced_rollout(params, policy, video.features, video.oracle(), train.sampling, rng);
      for (auto& st : tau.steps) st.reward = 0.0;
      tau.steps.back().reward = knapsack_protocol_reward(params, video.features, video, tau, train.budget_fraction);
      returns[j] = tau.steps.back().reward;
      grads[j] = ParamGradient::zeros_like(params);
      if (returns[j] != 0.0)
        for (const auto& st : tau.steps) grads[j].add_scaled(grad_log_policy_step(params, policy, video.features, st), -returns[j]);
    } else {
      tau = rollout(params, policy, video.features, train.sampling, rng);
      assign_rewards(tau, reward, video);
      returns[j] = discounted_return(tau, reward.discount);
      grads[j] = surrogate_gradient(params, policy, video.features, tau, reward.discount, train.surrogate);
    }
    trajs[j] = std::move(tau);
  });
  GradientEstimate est;
  est.grad = ParamGradient::zeros_like(params);
  const double scale = 1.0 / static_cast<double>(jobs);
  for (std::size_t j = 0; j < jobs; ++j) {
    est.grad.add_scaled(grads[j], scale);
    est.mean_return += returns[j] * scale;
    est.mean_steps += static_cast<double>(trajs[j].size()) * scale;
  }
  if (keep_trajectories) est.trajectories = std::move(trajs);
  return est;
}

// Gradient from an oracle-forced update on one video.
inline GradientEstimate oracle_forced_update(const PolicyParams& params, const PolicyConfig& policy,
                                             const VideoRecord& video, const TrainConfig& train, std::uint64_t seed) {
  video.oracle();
  TrainConfig forced = train;
  forced.oracle_forced = true;
  return policy_gradient_estimate(params, policy, {&video}, RewardConfig{}, forced, seed, true);
}

struct WeightedTrajectory {
  Trajectory trajectory;
  double probability = 0.0;
};

// Every trajectory with positive probability, by exhaustive expansion of the
// per-step joint action law.
inline std::vector<WeightedTrajectory> enumerate_trajectories(const PolicyParams& params, const PolicyConfig& policy,
                                                              const Eigen::MatrixXd& features,
                                                              std::size_t max_trajectories = 10000) {
  detail::check_policy(params, policy);
  const auto n = static_cast<std::size_t>(features.cols());
  std::vector<WeightedTrajectory> out;
  Trajectory prefix;
  std::function<void(const SummaryState&, double)> expand = [&](const SummaryState& s, double prob) {
    const PolicyDistribution pd = policy_distribution(params, policy, features, s);
    for (std::size_t c = 0; c < pd.subsets.probs.size(); ++c) {
      if (pd.subsets.probs[c] <= 0.0) continue;
      for (std::size_t k = 0; k < pd.lengths.size(); ++k) {
        const double pl = pd.length_probs(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k));
        if (pl <= 0.0) continue;
        TrajectoryStep st;
        st.state = s;
        st.action = {pd.global_subset(c), pd.lengths[k]};
        st.log_prob_subset = std::log(pd.subsets.probs[c]);
        st.log_prob_length = policy.kind.is_fixed() ? 0.0 : std::log(pl);
        prefix.steps.push_back(st);
        const auto next = transition(s, st.action, n);
        if (next) {
          expand(*next, prob * pd.subsets.probs[c] * pl);
        } else {
          if (out.size() >= max_trajectories)
            throw CapacityExceeded("more than " + std::to_string(max_trajectories) + " trajectories");
          out.push_back({prefix, prob * pd.subsets.probs[c] * pl});
        }
        prefix.steps.pop_back();
      }
    }
  };
  expand(initial_state(n, policy.first_segment_length()).first, 1.0);
  return out;
}

using TrajectoryReturnFn = std::function<double(const Trajectory&)>;

inline double expected_return(const PolicyParams& params, const PolicyConfig& policy, const Eigen::MatrixXd& features,
                              const TrajectoryReturnFn& ret, std::size_t max_trajectories = 10000) {
  double e = 0.0;
  for (const auto& wt : enumerate_trajectories(params, policy, features, max_trajectories)) e += wt.probability * ret(wt.trajectory);
  return e;
}

struct ExactGradient {
  ParamGradient exact;              // -sum_tau p(tau) G(tau) grad log p(tau)
  ParamGradient finite_difference;  // central differences of -E[G]
  double expected_return = 0.0;
  std::size_t num_trajectories = 0;
};

// Exact gradient of J = -E[G] by enumerating all trajectories, cross-checked
// by central finite differences of the enumerated expectation.
inline ExactGradient exact_gradient_oracle(const PolicyParams& params, const PolicyConfig& policy,
                                           const Eigen::MatrixXd& features, const TrajectoryReturnFn& ret,
                                           double fd_step = 1e-5, std::size_t max_trajectories = 10000) {
  ExactGradient out;
  out.exact = ParamGradient::zeros_like(params);
  const auto all = enumerate_trajectories(params, policy, features, max_trajectories);
  out.num_trajectories = all.size();
  for (const auto& wt : all) {
    const double g = ret(wt.trajectory);
    out.expected_return += wt.probability * g;
    if (g != 0.0)
      out.exact.add_scaled(grad_log_prob_trajectory(params, policy, features, wt.trajectory), -wt.probability * g);
  }
  const Eigen::VectorXd theta = params.to_vector();
  Eigen::VectorXd fd(theta.size());
  PolicyParams probe = params;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd t = theta;
    t(i) = theta(i) + fd_step;
    probe.assign_from_vector(t);
    const double up = expected_return(probe, policy, features, ret, max_trajectories);
    t(i) = theta(i) - fd_step;
    probe.assign_from_vector(t);
    const double down = expected_return(probe, policy, features, ret, max_trajectories);
    fd(i) = -(up - down) / (2.0 * fd_step);
  }
  out.finite_difference = ParamGradient::zeros_like(params);
  out.finite_difference.assign_from_vector(fd);
  return out;
}

// Return function for a video under a reward configuration.
inline TrajectoryReturnFn video_return(const VideoRecord& video, const RewardConfig& reward) {
  return [&video, reward](const Trajectory& tau) {
    Trajectory copy = tau;
    assign_rewards(copy, reward, video);
    return discounted_return(copy, reward.discount);
  };
}

inline ExactGradient exact_gradient_oracle(const PolicyParams& params, const PolicyConfig& policy,
                                           const VideoRecord& video, const RewardConfig& reward,
                                           double fd_step = 1e-5, std::size_t max_trajectories = 10000) {
  return exact_gradient_oracle(params, policy, video.features, video_return(video, reward), fd_step, max_trajectories);
}

struct TrainLogEntry {
  int update = 0;
  double mean_return = 0.0;
  double mean_steps = 0.0;
  double grad_norm = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<TrainLogEntry> log;
};

using UpdateCallback = std::function<void(const TrainLogEntry&, const PolicyParams&)>;

// Estimate the gradient on a batch, take one plain gradient-descent step,
// repeat. Deterministic given train.master_seed and independent of workers.
inline TrainResult train(PolicyParams params, const std::vector<VideoRecord>& dataset, const PolicyConfig& policy,
                         const RewardConfig& reward, const TrainConfig& config, const UpdateCallback& on_update = {}) {
  config.validate();
  params.validate();
  if (dataset.empty()) throw InvalidInput("training set is empty");
  for (const auto& v : dataset)
    if (v.feature_dim() != params.feature_dim())
      throw ShapeError("video " + v.id + " has feature dimension " + std::to_string(v.feature_dim()) +
                       ", model expects " + std::to_string(params.feature_dim()));
  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  for (int u = 0; u < config.num_updates; ++u) {
    Rng pick(derive_seed(config.master_seed, {0xba7c, static_cast<std::uint64_t>(u)}));
    std::vector<const VideoRecord*> batch;
    for (int b = 0; b < config.batch_size; ++b)
      batch.push_back(&dataset[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(dataset.size()) - 1))]);
    GradientEstimate est;
    try {
      est = policy_gradient_estimate(params, policy, batch, reward, config,
                                     derive_seed(config.master_seed, {0x9a4d, static_cast<std::uint64_t>(u)}));
    } catch (const NumericalFailure& e) {
      if (u == 0) throw;
      throw DivergedError("numerical failure after update " + std::to_string(u - 1) + ": " + e.what());
    }
    double norm = est.grad.norm();
    if (!std::isfinite(norm)) throw DivergedError("non-finite gradient at update " + std::to_string(u));
    if (config.clip_norm > 0.0 && norm > config.clip_norm) est.grad.scale(config.clip_norm / norm);
    if (config.learning_rate != 0.0) params.add_scaled(est.grad, -config.learning_rate);
    if (!params.all_finite()) throw DivergedError("parameters became non-finite at update " + std::to_string(u));
    TrainLogEntry entry{u, est.mean_return, est.mean_steps, norm,
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    result.log.push_back(entry);
    if (on_update) on_update(entry, params);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace dyseqdpp
