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

// Exact L-ensemble determinantal point process computations for ground sets
// small enough to enumerate.
//
// Subsets of a ground set of size N are bitmasks: bit i set means the item at
// row/column i of the kernel is included. Enumeration is capped at
// kMaxEnumerable free items.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/random.hpp"

namespace dyseqdpp {

using Subset = std::uint64_t;

inline constexpr int kMaxEnumerable = 20;
inline constexpr int kMaxGroundSet = 64;
inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kPsdTolerance = 1e-8;
// A determinant (or Cholesky pivot) at most this fraction of the product of
// the corresponding diagonal entries is treated as exactly zero.
inline constexpr double kZeroDetRelTolerance = 1e-12;

inline int subset_size(Subset s) { return std::popcount(s); }

inline std::vector<int> subset_members(Subset s) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(std::popcount(s)));
  for (int i = 0; s != 0; ++i, s >>= 1) {
    if (s & 1u) out.push_back(i);
  }
  return out;
}

inline Subset subset_from(const std::vector<int>& members) {
  Subset s = 0;
  for (int m : members) {
    if (m < 0 || m >= kMaxGroundSet) throw InvalidSubset("subset member out of range: " + std::to_string(m));
    s |= Subset{1} << m;
  }
  return s;
}

inline Subset full_subset(int n) { return n >= 64 ? ~Subset{0} : (Subset{1} << n) - 1; }

// Determinant via partial-pivot LU; det of a 0x0 matrix is 1.
inline double determinant(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 1.0;
  return Eigen::PartialPivLU<Eigen::MatrixXd>(a).determinant();
}

inline Eigen::MatrixXd principal_submatrix(const Eigen::MatrixXd& m, Subset s) {
  const std::vector<int> idx = subset_members(s);
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) out(r, c) = m(idx[r], idx[c]);
  return out;
}

// Determinant of a principal submatrix of a PSD matrix, with values that are
// numerically indistinguishable from zero (including small negatives from
// round-off) mapped to exactly 0.
inline double psd_principal_det(const Eigen::MatrixXd& m, Subset s) {
  const Eigen::MatrixXd sub = principal_submatrix(m, s);
  if (sub.size() == 0) return 1.0;
  double diag_product = 1.0;
  for (Eigen::Index i = 0; i < sub.rows(); ++i) diag_product *= std::max(sub(i, i), 0.0);
  const double det = determinant(sub);
  if (!std::isfinite(det)) throw NumericalFailure("non-finite determinant");
  if (det <= kZeroDetRelTolerance * diag_product) return 0.0;
  return det;
}

// Ordered list of distinct global item indices; position defines the
// kernel row/column.
class GroundSet {
 public:
  GroundSet() = default;
  explicit GroundSet(std::vector<std::size_t> items) : items_(std::move(items)) {
    std::unordered_set<std::size_t> seen;
    for (std::size_t it : items_) {
      if (!seen.insert(it).second) throw InvalidInput("ground set items must be distinct");
    }
  }

  std::size_t size() const { return items_.size(); }
  const std::vector<std::size_t>& items() const { return items_; }
  std::size_t operator[](std::size_t i) const { return items_[i]; }

  // Global indices of the members of a local subset.
  std::vector<std::size_t> global(Subset s) const {
    std::vector<std::size_t> out;
    for (int i : subset_members(s)) {
      if (static_cast<std::size_t>(i) >= items_.size()) throw InvalidSubset("subset exceeds ground set");
      out.push_back(items_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> items_;
};

namespace detail {

inline void check_square_finite(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw ShapeError(std::string(what) + " must be square");
  if (m.rows() > kMaxGroundSet) throw CapacityExceeded(std::string(what) + " larger than 64 items");
  if (!m.allFinite()) throw NumericalFailure(std::string(what) + " has non-finite entries");
}

inline void check_symmetric(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = r + 1; c < m.cols(); ++c)
      if (std::abs(m(r, c) - m(c, r)) > kSymmetryTolerance)
        throw InvalidInput(std::string(what) + " is not symmetric");
}

inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

inline void check_subset(Subset s, Eigen::Index n) {
  if (n < 64 && (s & ~full_subset(static_cast<int>(n))) != 0)
    throw InvalidSubset("subset index out of range for ground set of size " + std::to_string(n));
}

}  // namespace detail

// Symmetric PSD L-ensemble kernel.
class LKernel {
 public:
  LKernel() = default;

  explicit LKernel(Eigen::MatrixXd m) : m_(std::move(m)) {
    detail::check_square_finite(m_, "L kernel");
    detail::check_symmetric(m_, "L kernel");
    const Eigen::VectorXd ev = detail::eigenvalues(m_);
    if (ev.size() > 0 && ev.minCoeff() < -kPsdTolerance)
      throw InvalidInput("L kernel is not positive semidefinite");
  }

  // Gram kernel phi^T phi of the columns of `phi`. PSD by construction, so
  // the eigenvalue check is skipped; the result is made exactly symmetric.
  static LKernel gram(const Eigen::MatrixXd& phi) {
    LKernel k;
    Eigen::MatrixXd g = phi.transpose() * phi;
    k.m_ = 0.5 * (g + g.transpose());
    detail::check_square_finite(k.m_, "L kernel");
    return k;
  }

  Eigen::Index size() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

 private:
  Eigen::MatrixXd m_;
};

// Marginal kernel K = L (L + I)^{-1}: P(y subset of Y) = det(K_y).
class MarginalKernel {
 public:
  MarginalKernel() = default;
  explicit MarginalKernel(Eigen::MatrixXd m) : m_(std::move(m)) {
    detail::check_square_finite(m_, "marginal kernel");
    detail::check_symmetric(m_, "marginal kernel");
    const Eigen::VectorXd ev = detail::eigenvalues(m_);
    if (ev.size() > 0 && (ev.minCoeff() < -kPsdTolerance || ev.maxCoeff() > 1.0 + kPsdTolerance))
      throw InvalidInput("marginal kernel eigenvalues outside [0, 1]");
  }

  Eigen::Index size() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

// Probability of each subset of the free (non-conditioned) items. Index k of
// `probs` is a compact mask over `free_items`; expand() maps it back to the
// ground-set mask.
struct SubsetDistribution {
  std::vector<int> free_items;
  Subset conditioned = 0;
  std::vector<double> probs;

  Subset expand(std::size_t compact) const {
    Subset out = 0;
    for (std::size_t b = 0; b < free_items.size(); ++b)
      if ((compact >> b) & 1u) out |= Subset{1} << free_items[b];
    return out;
  }

  std::size_t compact(Subset ground) const {
    std::size_t out = 0;
    for (std::size_t b = 0; b < free_items.size(); ++b)
      if ((ground >> free_items[b]) & 1u) out |= std::size_t{1} << b;
    return out;
  }

  double prob(Subset ground) const { return probs[compact(ground)]; }

  double total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
};

// P(Y = y) = det(L_y) / det(L + I).
inline double elementary_prob(const LKernel& l, Subset y) {
  detail::check_subset(y, l.size());
  const Eigen::Index n = l.size();
  const double denom = determinant(l.matrix() + Eigen::MatrixXd::Identity(n, n));
  if (!std::isfinite(denom) || denom <= 0.0) throw NumericalFailure("det(L + I) is not positive");
  return psd_principal_det(l.matrix(), y) / denom;
}

// P(y subset of Y) = det(K_y).
inline double marginal_prob(const MarginalKernel& k, Subset y) {
  detail::check_subset(y, k.size());
  const double det = determinant(principal_submatrix(k.matrix(), y));
  if (!std::isfinite(det)) throw NumericalFailure("non-finite determinant");
  return std::max(det, 0.0);
}

inline MarginalKernel to_marginal_kernel(const LKernel& l) {
  const Eigen::Index n = l.size();
  if (n == 0) return MarginalKernel(Eigen::MatrixXd(0, 0));
  const Eigen::MatrixXd shifted = l.matrix() + Eigen::MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
  if (!std::isfinite(lu.determinant()) || std::abs(lu.determinant()) == 0.0)
    throw NumericalFailure("L + I is singular");
  // L and (L + I)^{-1} commute, so K = (L + I)^{-1} L.
  Eigen::MatrixXd k = lu.solve(l.matrix());
  if (!k.allFinite()) throw NumericalFailure("marginal kernel solve failed");
  k = 0.5 * (k + k.transpose());
  return MarginalKernel(std::move(k));
}

// det(L + I restricted to the diagonal entries of items outside y0).
inline double conditional_normalizer(const LKernel& l, Subset y0) {
  const Eigen::Index n = l.size();
  Eigen::MatrixXd shifted = l.matrix();
  for (Eigen::Index i = 0; i < n; ++i)
    if (((y0 >> i) & 1u) == 0) shifted(i, i) += 1.0;
  return determinant(shifted);
}

// P(Y = y1 union y0 | y0 subset of Y) = det(L_{y1 u y0}) / det(L + I_{not y0}).
inline double conditional_prob(const LKernel& l, Subset y1, Subset y0) {
  detail::check_subset(y1, l.size());
  detail::check_subset(y0, l.size());
  if ((y1 & y0) != 0) throw InvalidSubset("conditioning set overlaps selected subset");
  const double denom = conditional_normalizer(l, y0);
  if (!std::isfinite(denom) || denom <= 0.0)
    throw NumericalFailure("conditioning set has zero probability");
  return psd_principal_det(l.matrix(), y1 | y0) / denom;
}

// Log of conditional_prob; -infinity when the numerator vanishes.
inline double log_conditional_prob(const LKernel& l, Subset y1, Subset y0) {
  const double p = conditional_prob(l, y1, y0);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

namespace detail {

// Depth-first walk over every subset of `free`, maintaining an incremental
// Cholesky factor of L restricted to (base items + chosen items). Writes
// det(L_{base u chosen}) into out[compact mask]; pruned branches stay 0.
class SubsetDeterminantWalker {
 public:
  SubsetDeterminantWalker(const Eigen::MatrixXd& l, std::vector<int> base, std::vector<int> free)
      : l_(l), base_(std::move(base)), free_(std::move(free)) {
    const auto cap = static_cast<Eigen::Index>(base_.size() + free_.size());
    chol_ = Eigen::MatrixXd::Zero(cap, cap);
    members_.reserve(static_cast<std::size_t>(cap));
  }

  std::vector<double> run() {
    std::vector<double> out(std::size_t{1} << free_.size(), 0.0);
    double base_det = 1.0;
    for (int item : base_) {
      double pivot = 0.0;
      if (!push(item, pivot)) return out;  // conditioning set itself has zero volume
      base_det *= pivot;
    }
    out[0] = base_det;
    visit(0, 0, base_det, out);
    return out;
  }

 private:
  bool push(int item, double& pivot) {
    const auto k = static_cast<Eigen::Index>(members_.size());
    double sq = 0.0;
    for (Eigen::Index r = 0; r < k; ++r) {
      double v = l_(members_[static_cast<std::size_t>(r)], item);
      for (Eigen::Index c = 0; c < r; ++c) v -= chol_(r, c) * chol_(k, c);
      v /= chol_(r, r);
      chol_(k, r) = v;
      sq += v * v;
    }
    pivot = l_(item, item) - sq;
    if (!(pivot > kZeroDetRelTolerance * std::max(l_(item, item), 0.0)) || pivot <= 0.0) return false;
    chol_(k, k) = std::sqrt(pivot);
    members_.push_back(item);
    return true;
  }

  void visit(std::size_t start, std::size_t mask, double det, std::vector<double>& out) {
    for (std::size_t j = start; j < free_.size(); ++j) {
      double pivot = 0.0;
      if (!push(free_[j], pivot)) continue;
      const std::size_t next = mask | (std::size_t{1} << j);
      const double d = det * pivot;
      out[next] = d;
      visit(j + 1, next, d, out);
      members_.pop_back();
    }
  }

  const Eigen::MatrixXd& l_;
  std::vector<int> base_;
  std::vector<int> free_;
  Eigen::MatrixXd chol_;
  std::vector<int> members_;
};

}  // namespace detail

// Exact conditional distribution over all subsets of the items not in
// `conditioned_on`. Numerators come from an incremental Cholesky walk; the
// normalizer is the LU determinant det(L + I_{not y0}).
inline SubsetDistribution enumerate_distribution(const LKernel& l, Subset conditioned_on) {
  detail::check_subset(conditioned_on, l.size());
  const int n = static_cast<int>(l.size());
  SubsetDistribution dist;
  dist.conditioned = conditioned_on;
  std::vector<int> base;
  for (int i = 0; i < n; ++i) {
    if ((conditioned_on >> i) & 1u)
      base.push_back(i);
    else
      dist.free_items.push_back(i);
  }
  if (static_cast<int>(dist.free_items.size()) > kMaxEnumerable)
    throw CapacityExceeded("too many free items to enumerate: " + std::to_string(dist.free_items.size()));
  const double denom = conditional_normalizer(l, conditioned_on);
  if (!std::isfinite(denom) || denom <= 0.0)
    throw NumericalFailure("conditioning set has zero probability");
  dist.probs = detail::SubsetDeterminantWalker(l.matrix(), base, dist.free_items).run();
  for (double& p : dist.probs) p /= denom;
  return dist;
}

// Inverse-CDF draw; returns the ground-set mask of the drawn free items.
inline Subset sample_subset(const SubsetDistribution& dist, Rng& rng) {
  const double u = rng.uniform() * dist.total();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < dist.probs.size(); ++k) {
    if (dist.probs[k] <= 0.0) continue;
    acc += dist.probs[k];
    last_positive = k;
    if (u < acc) return dist.expand(k);
  }
  return dist.expand(last_positive);
}

// Most probable subset; ties go to the smallest bitmask.
inline Subset map_subset(const SubsetDistribution& dist) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < dist.probs.size(); ++k)
    if (dist.probs[k] > dist.probs[best]) best = k;
  return dist.expand(best);
}

// Draws from the conditional DPP given `conditioned_on` without enumerating:
// the conditional law is the L-ensemble of the Schur complement over the free
// items, sampled item by item through its marginal kernel. One uniform is
// consumed per free item.
inline Subset sample_conditional(const LKernel& l, Subset conditioned_on, Rng& rng) {
  detail::check_subset(conditioned_on, l.size());
  const int n = static_cast<int>(l.size());
  std::vector<int> base, free;
  for (int i = 0; i < n; ++i) ((conditioned_on >> i) & 1u ? base : free).push_back(i);
  const auto nb = static_cast<Eigen::Index>(base.size());
  const auto nf = static_cast<Eigen::Index>(free.size());
  if (nf == 0) return 0;

  Eigen::MatrixXd lff(nf, nf), lfb(nf, nb), lbb(nb, nb);
  for (Eigen::Index r = 0; r < nf; ++r) {
    for (Eigen::Index c = 0; c < nf; ++c) lff(r, c) = l(free[r], free[c]);
    for (Eigen::Index c = 0; c < nb; ++c) lfb(r, c) = l(free[r], base[c]);
  }
  for (Eigen::Index r = 0; r < nb; ++r)
    for (Eigen::Index c = 0; c < nb; ++c) lbb(r, c) = l(base[r], base[c]);

  Eigen::MatrixXd schur = lff;
  if (nb > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lbb);
    if (ldlt.info() != Eigen::Success || psd_principal_det(lbb, full_subset(static_cast<int>(nb))) <= 0.0)
      throw NumericalFailure("conditioning set has zero probability");
    schur -= lfb * ldlt.solve(lfb.transpose());
  }
  schur = 0.5 * (schur + schur.transpose());
  const Eigen::MatrixXd shifted = schur + Eigen::MatrixXd::Identity(nf, nf);
  Eigen::MatrixXd k = Eigen::PartialPivLU<Eigen::MatrixXd>(shifted).solve(schur);
  k = 0.5 * (k + k.transpose());

  Subset out = 0;
  for (Eigen::Index i = 0; i < nf; ++i) {
    const double p = std::clamp(k(i, i), 0.0, 1.0);
    const double u = rng.uniform();
    const Eigen::VectorXd col = k.col(i);
    if (u < p) {
      out |= Subset{1} << free[i];
      k -= col * col.transpose() / k(i, i);
    } else if (std::abs(k(i, i) - 1.0) > 1e-15) {
      k -= col * col.transpose() / (k(i, i) - 1.0);
    }
  }
  return out;
}

}  // namespace dyseqdpp
