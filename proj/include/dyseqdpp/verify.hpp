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

// Self-check suites comparing the library against brute-force references:
// subset enumeration, superset sums, finite differences, exhaustive matching
// and exhaustive knapsack search.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dyseqdpp/dpp.hpp"
#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/kernel_net.hpp"
#include "dyseqdpp/metrics.hpp"
#include "dyseqdpp/random.hpp"
#include "dyseqdpp/rl.hpp"
#include "dyseqdpp/seq_model.hpp"

namespace dyseqdpp {

enum class VerifyLevel { Quick, Full };

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::Full;
  std::uint64_t seed = 0;
  // Negative control: perturbs one off-diagonal entry of every kernel the
  // normalization suite builds.
  bool inject_asymmetry = false;
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  bool skipped = false;
  std::size_t checks = 0;
  std::string failure;  // first failing invariant
};

namespace detail {

class SuiteRecorder {
 public:
  explicit SuiteRecorder(std::string name) { result_.name = std::move(name); }

  // Records one invariant; keeps only the first failure message.
  bool expect(bool ok, const std::function<std::string()>& what) {
    ++result_.checks;
    if (!ok && result_.passed) {
      result_.passed = false;
      result_.failure = what();
    }
    return ok;
  }

  bool ok() const { return result_.passed; }
  SuiteResult finish() { return result_; }

  SuiteResult run(const std::function<void(SuiteRecorder&)>& body) {
    try {
      body(*this);
    } catch (const std::exception& e) {
      expect(false, [&] { return std::string("unexpected error: ") + e.what(); });
    }
    return finish();
  }

 private:
  SuiteResult result_;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline Eigen::MatrixXd random_psd(int n, Rng& rng, int rank = -1) {
  const int r = rank > 0 ? rank : n;
  Eigen::MatrixXd b(n, r);
  for (Eigen::Index c = 0; c < b.cols(); ++c)
    for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, c) = rng.normal() / std::sqrt(static_cast<double>(r));
  return b * b.transpose();
}

inline Subset random_subset(int n, Rng& rng, double p = 0.5) {
  Subset s = 0;
  for (int i = 0; i < n; ++i)
    if (rng.uniform() < p) s |= Subset{1} << i;
  return s;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = scale * rng.normal();
  return m;
}

// Max-norm discrepancy relative to the max-norm of the reference.
inline double max_relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& ref) {
  if (got.size() == 0) return 0.0;
  return (got - ref).cwiseAbs().maxCoeff() / std::max(ref.cwiseAbs().maxCoeff(), 1e-12);
}

inline Eigen::VectorXd central_difference(const Eigen::VectorXd& x, double h,
                                          const std::function<double(const Eigen::VectorXd&)>& f) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

// Upper 0.001 quantile of the chi-squared law (Wilson-Hilferty).
inline double chi2_critical_001(int dof) {
  const double k = static_cast<double>(dof);
  const double z = 3.090232306167813;
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

// Pearson statistic over cells with positive expectation.
inline double chi2_statistic(const std::vector<double>& probs, const std::vector<std::size_t>& counts, std::size_t n,
                             int* dof) {
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * static_cast<double>(n);
    if (e <= 0.0) continue;
    ++cells;
    const double d = static_cast<double>(counts[i]) - e;
    stat += d * d / e;
  }
  *dof = std::max(cells - 1, 1);
  return stat;
}

}  // namespace detail

// A small MDP whose trajectories can be enumerated: six shots, lengths {2, 3}.
struct TinyMdp {
  PolicyParams params;
  PolicyConfig policy;
  VideoRecord video;
  RewardConfig reward;
};

inline TinyMdp make_tiny_mdp(std::uint64_t seed, std::size_t shots = 6) {
  Rng rng(derive_seed(seed, {0x71e1}));
  TinyMdp m;
  m.params = PolicyParams::init({4, 5, 4, 3}, LengthMenu({2, 3}), rng);
  m.params.length_bias = detail::random_matrix(2, 1, rng, 0.5).col(0);
  m.policy.kind = PolicyKind::dynamic();
  m.policy.initial_length = 2;
  m.video.id = "tiny";
  m.video.features = detail::random_matrix(4, static_cast<int>(shots), rng);
  std::vector<ConceptVector> concepts(shots, ConceptVector(8));
  for (auto& c : concepts)
    for (auto& b : c) b = rng.uniform() < 0.5 ? 1 : 0;
  m.video.concepts = concepts;
  m.video.user_summaries = {{1, 4}, {0, 3, 5}};
  m.reward.discount = Discount::geometric(0.5);
  m.reward.matcher.window = 2;
  return m;
}

// Sum of det(L_y) over all subsets equals det(L + I).
inline SuiteResult verify_normalization(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("normalization");
  return rec.run([&](detail::SuiteRecorder& r) {
    Rng rng(derive_seed(opt.seed, {0x01}));
    const int instances = opt.level == VerifyLevel::Quick ? 40 : 200;
    for (int k = 0; k < instances && r.ok(); ++k) {
      const int n = static_cast<int>(rng.uniform_int(2, 12));
      Eigen::MatrixXd m = detail::random_psd(n, rng, static_cast<int>(rng.uniform_int(1, n + 2)));
      if (opt.inject_asymmetry) m(0, 1) += 1e-3;
      LKernel l = [&] {
        try {
          return LKernel(m);
        } catch (const Error& e) {
          r.expect(false, [&] { return std::string("kernel rejected: ") + e.what(); });
          throw;
        }
      }();
      double sum = 0.0;
      for (Subset y = 0; y <= full_subset(n); ++y) sum += determinant(principal_submatrix(l.matrix(), y));
      const double z = determinant(l.matrix() + Eigen::MatrixXd::Identity(n, n));
      const double rel = std::abs(sum - z) / z;
      r.expect(rel <= 1e-9, [&] { return "sum of subset determinants differs from det(L+I) by " + detail::fmt(rel) + " (N=" + std::to_string(n) + ")"; });
      r.expect(std::abs(elementary_prob(l, 0) * z - 1.0) <= 1e-9, [] { return "P(empty) * det(L+I) != 1"; });
    }
  });
}

// Conditional law sums to one and matches normalized superset determinants.
inline SuiteResult verify_conditional(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("conditional");
  return rec.run([&](detail::SuiteRecorder& r) {
    {
      const LKernel l((Eigen::MatrixXd(2, 2) << 2, 1, 1, 2).finished());
      const SubsetDistribution d = enumerate_distribution(l, 0b01);
      r.expect(std::abs(d.prob(0b11) - 0.6) <= 1e-12 && std::abs(d.prob(0b01) - 0.4) <= 1e-12,
               [&] { return "2x2 worked example gives " + detail::fmt(d.prob(0b11)) + "/" + detail::fmt(d.prob(0b01)); });
    }
    Rng rng(derive_seed(opt.seed, {0x02}));
    const int instances = opt.level == VerifyLevel::Quick ? 30 : 100;
    for (int k = 0; k < instances && r.ok(); ++k) {
      const int n = static_cast<int>(rng.uniform_int(1, 10));
      const LKernel l(detail::random_psd(n, rng));
      const Subset y0 = detail::random_subset(n, rng, 0.3);
      const SubsetDistribution d = enumerate_distribution(l, y0);
      r.expect(std::abs(d.total() - 1.0) <= 1e-9, [&] { return "conditional law sums to " + detail::fmt(d.total()); });
      double z = 0.0;
      for (Subset y = 0; y <= full_subset(n); ++y)
        if ((y & y0) == y0) z += determinant(principal_submatrix(l.matrix(), y));
      for (std::size_t c = 0; c < d.probs.size(); ++c) {
        const Subset y = d.expand(c) | y0;
        const double ref = determinant(principal_submatrix(l.matrix(), y)) / z;
        if (!r.expect(std::abs(d.probs[c] - ref) <= 1e-9, [&] { return "conditional probability differs from superset ratio by " + detail::fmt(d.probs[c] - ref); }))
          break;
        r.expect(std::abs(conditional_prob(l, y & ~y0, y0) - ref) <= 1e-9, [] { return "conditional_prob disagrees with enumeration"; });
      }
    }
  });
}

// det(K_y) equals the probability that the sample contains y.
inline SuiteResult verify_marginal(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("marginal");
  return rec.run([&](detail::SuiteRecorder& r) {
    const MarginalKernel k22 = to_marginal_kernel(LKernel((Eigen::MatrixXd(2, 2) << 2, 1, 1, 2).finished()));
    const Eigen::Matrix2d expect_k = (Eigen::Matrix2d() << 0.625, 0.125, 0.125, 0.625).finished();
    r.expect((k22.matrix() - expect_k).cwiseAbs().maxCoeff() <= 1e-12, [] { return "marginal kernel of [[2,1],[1,2]] is wrong"; });
    Rng rng(derive_seed(opt.seed, {0x03}));
    const int instances = opt.level == VerifyLevel::Quick ? 15 : 50;
    for (int t = 0; t < instances && r.ok(); ++t) {
      const int n = static_cast<int>(rng.uniform_int(1, 10));
      const LKernel l(detail::random_psd(n, rng));
      const MarginalKernel mk = to_marginal_kernel(l);
      const double z = determinant(l.matrix() + Eigen::MatrixXd::Identity(n, n));
      std::vector<double> p(std::size_t{1} << n);
      for (Subset y = 0; y <= full_subset(n); ++y) p[y] = determinant(principal_submatrix(l.matrix(), y)) / z;
      for (Subset y = 0; y <= full_subset(n); ++y) {
        double sup = 0.0;
        for (Subset s = 0; s <= full_subset(n); ++s)
          if ((s & y) == y) sup += p[s];
        if (!r.expect(std::abs(marginal_prob(mk, y) - sup) <= 1e-8, [&] { return "inclusion probability differs from superset sum by " + detail::fmt(marginal_prob(mk, y) - sup); }))
          break;
      }
    }
  });
}

// Analytic gradients of both policy factors against central differences.
inline SuiteResult verify_gradient(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("gradient");
  return rec.run([&](detail::SuiteRecorder& r) {
    Rng rng(derive_seed(opt.seed, {0x04}));
    const int instances = opt.level == VerifyLevel::Quick ? 8 : 20;
    const double h = 1e-5;
    for (int t = 0; t < instances && r.ok(); ++t) {
      const int d = static_cast<int>(rng.uniform_int(3, 6));
      PolicyParams p = PolicyParams::init({d, 6, 5, 6}, LengthMenu({2, 3, 5}), rng);
      p.length_bias = detail::random_matrix(3, 1, rng, 0.5).col(0);
      const int n_prev = static_cast<int>(rng.uniform_int(0, 2));
      const int n_seg = static_cast<int>(rng.uniform_int(1, 4));
      const Eigen::MatrixXd feats = detail::random_matrix(d, n_prev + n_seg, rng);
      const Subset prev = full_subset(n_prev);
      const Subset xt = detail::random_subset(n_seg, rng) << n_prev;
      const Eigen::VectorXd theta = p.to_vector();
      PolicyParams probe = p;
      const double base = log_cond_prob(p, feats, xt, prev);
      if (!std::isfinite(base)) continue;
      const Eigen::VectorXd analytic = grad_log_cond_prob(p, feats, xt, prev).to_vector();
      const Eigen::VectorXd fd = detail::central_difference(theta, h, [&](const Eigen::VectorXd& v) {
        probe.assign_from_vector(v);
        return log_cond_prob(probe, feats, xt, prev);
      });
      const double e1 = detail::max_relative_error(analytic, fd);
      r.expect(e1 <= 1e-4, [&] { return "subset log-probability gradient relative error " + detail::fmt(e1); });

      const Eigen::VectorXd pooled = detail::random_matrix(d, 1, rng).col(0);
      const int len = p.menu[static_cast<std::size_t>(rng.uniform_int(0, 2))];
      const Eigen::VectorXd analytic_l = grad_log_length_prob(p, pooled, len).to_vector();
      const Eigen::VectorXd fd_l = detail::central_difference(theta, h, [&](const Eigen::VectorXd& v) {
        probe.assign_from_vector(v);
        return log_length_prob(probe, pooled, len);
      });
      const double e2 = detail::max_relative_error(analytic_l, fd_l);
      r.expect(e2 <= 1e-4, [&] { return "length log-probability gradient relative error " + detail::fmt(e2); });
    }
  });
}

// Exact score-function gradient on an enumerable MDP against finite
// differences of the expected return, plus the sampled estimator at full level.
inline SuiteResult verify_estimator(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("estimator");
  return rec.run([&](detail::SuiteRecorder& r) {
    const TinyMdp m = make_tiny_mdp(derive_seed(opt.seed, {0x05}));
    const ExactGradient ex = exact_gradient_oracle(m.params, m.policy, m.video, m.reward);
    const Eigen::VectorXd a = ex.exact.to_vector();
    const Eigen::VectorXd f = ex.finite_difference.to_vector();
    const double rel = detail::max_relative_error(a, f);
    r.expect(rel <= 1e-4, [&] { return "exact gradient differs from finite differences by relative " + detail::fmt(rel); });

    const auto all = enumerate_trajectories(m.params, m.policy, m.video.features);
    ParamGradient weighted = ParamGradient::zeros_like(m.params);
    double mass = 0.0;
    for (const auto& wt : all) {
      Trajectory tau = wt.trajectory;
      assign_rewards(tau, m.reward, m.video);
      weighted.add_scaled(surrogate_gradient(m.params, m.policy, m.video.features, tau, m.reward.discount,
                                             Surrogate::TrajectoryReturn),
                          wt.probability);
      mass += wt.probability;
    }
    r.expect(std::abs(mass - 1.0) <= 1e-9, [&] { return "trajectory probabilities sum to " + detail::fmt(mass); });
    const double rel_w = detail::max_relative_error(weighted.to_vector(), a);
    r.expect(rel_w <= 1e-8, [&] { return "probability-weighted estimator differs from exact gradient by " + detail::fmt(rel_w); });

    const ExactGradient constant = exact_gradient_oracle(m.params, m.policy, m.video.features,
                                                         [](const Trajectory&) { return 0.7; });
    r.expect(constant.exact.to_vector().cwiseAbs().maxCoeff() <= 1e-10, [] { return "constant return has non-zero exact gradient"; });

    if (opt.level == VerifyLevel::Quick) return;
    TrainConfig tc;
    tc.num_trajectories = 100000;
    tc.workers = 1;
    const std::uint64_t seed = derive_seed(opt.seed, {0x55});
    const GradientEstimate est = policy_gradient_estimate(m.params, m.policy, {&m.video}, m.reward, tc, seed, true);
    const Eigen::Index dim = a.size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim), sq = Eigen::VectorXd::Zero(dim);
    for (const auto& tau : est.trajectories) {
      const Eigen::VectorXd g =
          surrogate_gradient(m.params, m.policy, m.video.features, tau, m.reward.discount, Surrogate::TrajectoryReturn).to_vector();
      sum += g;
      sq += g.cwiseProduct(g);
    }
    const double kk = static_cast<double>(est.trajectories.size());
    const Eigen::VectorXd mean = sum / kk;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double var = std::max(sq(i) / kk - mean(i) * mean(i), 0.0) * kk / (kk - 1.0);
      const double se = std::sqrt(var / kk);
      const double diff = std::abs(est.grad.to_vector()(i) - a(i));
      if (!r.expect(diff <= 3.0 * se + 1e-12, [&] { return "sampled estimator component " + std::to_string(i) + " is " + detail::fmt(diff / se) + " standard errors from exact"; }))
        break;
    }
  });
}

inline double brute_force_matching(const Eigen::MatrixXd& w) {
  const bool flip = w.rows() > w.cols();
  const Eigen::MatrixXd m = flip ? Eigen::MatrixXd(w.transpose()) : w;
  std::vector<int> cols(static_cast<std::size_t>(m.cols()));
  for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = static_cast<int>(i);
  double best = 0.0;
  do {
    double s = 0.0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) s += m(r, cols[static_cast<std::size_t>(r)]);
    best = std::max(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

// Matching scores against exhaustive search, and K monotonicity.
inline SuiteResult verify_matching(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("matching");
  return rec.run([&](detail::SuiteRecorder& r) {
    {
      std::vector<ConceptVector> c(10, ConceptVector(54, 0));
      for (int b = 0; b < 27; ++b) c[5][static_cast<std::size_t>(b)] = 1;
      const MatchScore s = bipartite_match_f1({2, 5}, {2, 9}, c, {4, MatchConfig::Mode::Weighted, 0});
      r.expect(std::abs(s.size - 1.5) <= 1e-12 && std::abs(s.f1 - 0.75) <= 1e-12,
               [&] { return "worked matching example gives size " + detail::fmt(s.size) + ", F1 " + detail::fmt(s.f1); });
    }
    Rng rng(derive_seed(opt.seed, {0x06}));
    const int instances = opt.level == VerifyLevel::Quick ? 30 : 100;
    for (int t = 0; t < instances && r.ok(); ++t) {
      const int shots = 20;
      std::vector<ConceptVector> concepts(shots, ConceptVector(12));
      for (auto& c : concepts)
        for (auto& b : c) b = rng.uniform() < 0.5 ? 1 : 0;
      auto pick = [&](int count) {
        std::vector<std::size_t> v;
        while (static_cast<int>(v.size()) < count) {
          const auto s = static_cast<std::size_t>(rng.uniform_int(0, shots - 1));
          if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
        }
        return v;
      };
      const auto sys = pick(static_cast<int>(rng.uniform_int(0, 6)));
      const auto usr = pick(static_cast<int>(rng.uniform_int(0, 6)));
      const MatchConfig cfg{static_cast<int>(rng.uniform_int(0, 8)), MatchConfig::Mode::Weighted, 0};
      Eigen::MatrixXd w(static_cast<Eigen::Index>(sys.size()), static_cast<Eigen::Index>(usr.size()));
      for (std::size_t i = 0; i < sys.size(); ++i)
        for (std::size_t j = 0; j < usr.size(); ++j)
          w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = match_weight(sys[i], usr[j], concepts, cfg);
      const double ref = brute_force_matching(w);
      const MatchScore s = bipartite_match_f1(sys, usr, concepts, cfg);
      r.expect(std::abs(s.size - ref) <= 1e-9, [&] { return "matching size " + detail::fmt(s.size) + " but exhaustive optimum is " + detail::fmt(ref); });
      double prev = -1.0;
      for (std::optional<int> k : {std::optional<int>(1), std::optional<int>(2), std::optional<int>(4),
                                   std::optional<int>(8), std::optional<int>()}) {
        const double size = bipartite_match_f1(sys, usr, concepts, {k, MatchConfig::Mode::Weighted, 0}).size;
        r.expect(size >= prev - 1e-12, [] { return "matching size decreases as the window grows"; });
        prev = size;
      }
    }
  });
}

// Knapsack optimum against exhaustive search over all scene subsets.
inline SuiteResult verify_knapsack(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("knapsack");
  return rec.run([&](detail::SuiteRecorder& r) {
    Rng rng(derive_seed(opt.seed, {0x07}));
    const int instances = opt.level == VerifyLevel::Quick ? 30 : 150;
    for (int t = 0; t < instances && r.ok(); ++t) {
      const auto n = static_cast<std::size_t>(rng.uniform_int(1, 15));
      SceneScoreSet set;
      for (std::size_t i = 0; i < n; ++i) {
        set.scores.push_back(rng.uniform());
        set.durations.push_back(static_cast<double>(rng.uniform_int(1, 12)));
      }
      const double budget = static_cast<double>(rng.uniform_int(1, 40));
      double best = 0.0;
      for (Subset s = 0; s <= full_subset(static_cast<int>(n)); ++s) {
        double dur = 0.0, sc = 0.0;
        for (int i : subset_members(s)) {
          dur += set.durations[static_cast<std::size_t>(i)];
          sc += set.scores[static_cast<std::size_t>(i)];
        }
        if (dur <= budget) best = std::max(best, sc);
      }
      double got = 0.0, used = 0.0;
      for (std::size_t i : knapsack_select(set, budget)) {
        got += set.scores[i];
        used += set.durations[i];
      }
      r.expect(used <= budget, [] { return "knapsack exceeds the budget"; });
      r.expect(std::abs(got - best) <= 1e-9, [&] { return "knapsack total " + detail::fmt(got) + " but exhaustive optimum is " + detail::fmt(best); });
    }
  });
}

// Empirical laws of the samplers at 10^5 draws (full level only).
inline SuiteResult verify_sampling(const VerifyOptions& opt) {
  detail::SuiteRecorder rec("sampling");
  if (opt.level == VerifyLevel::Quick) {
    SuiteResult s = rec.finish();
    s.skipped = true;
    return s;
  }
  return rec.run([&](detail::SuiteRecorder& r) {
    const std::size_t draws = 100000;
    Rng rng(derive_seed(opt.seed, {0x08}));
    auto check = [&](const std::string& what, const std::vector<double>& probs, const std::vector<std::size_t>& counts) {
      int dof = 0;
      const double stat = detail::chi2_statistic(probs, counts, draws, &dof);
      r.expect(stat <= detail::chi2_critical_001(dof), [&] { return what + " chi-squared " + detail::fmt(stat) + " with " + std::to_string(dof) + " dof"; });
    };
    {
      const LKernel l(detail::random_psd(4, rng));
      const SubsetDistribution d = enumerate_distribution(l, 0);
      std::vector<std::size_t> counts(d.probs.size(), 0);
      for (std::size_t i = 0; i < draws; ++i) ++counts[d.compact(sample_subset(d, rng))];
      check("inverse-CDF sampler", d.probs, counts);
    }
    {
      const LKernel l(detail::random_psd(5, rng));
      const SubsetDistribution d = enumerate_distribution(l, 0b00011);
      std::vector<std::size_t> counts(d.probs.size(), 0);
      for (std::size_t i = 0; i < draws; ++i) ++counts[d.compact(sample_conditional(l, 0b00011, rng))];
      check("conditional sampler", d.probs, counts);
    }
    {
      const TinyMdp m = make_tiny_mdp(derive_seed(opt.seed, {0x09}));
      SummaryState s = initial_state(m.video.num_shots(), 3).first;
      s.previous = {0};
      s.selected = {0};
      const PolicyDistribution pd = policy_distribution(m.params, m.policy, m.video.features, s);
      std::vector<double> probs;
      std::map<std::pair<std::vector<std::size_t>, int>, std::size_t> index;
      for (std::size_t c = 0; c < pd.subsets.probs.size(); ++c)
        for (std::size_t k = 0; k < pd.lengths.size(); ++k) {
          index[{pd.global_subset(c), pd.lengths[k]}] = probs.size();
          probs.push_back(pd.joint(c, k));
        }
      std::vector<std::size_t> counts(probs.size(), 0);
      for (std::size_t i = 0; i < draws; ++i) {
        const StepDecision a = sample_action(m.params, m.policy, m.video.features, s, rng);
        ++counts[index.at({a.action.subset, a.action.next_length})];
      }
      check("policy action sampler", probs, counts);
    }
  });
}

inline std::vector<SuiteResult> run_verify(const VerifyOptions& opt) {
  return {verify_normalization(opt), verify_conditional(opt), verify_marginal(opt), verify_gradient(opt),
          verify_estimator(opt),     verify_matching(opt),    verify_knapsack(opt), verify_sampling(opt)};
}

}  // namespace dyseqdpp
