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

// Parameterized kernel network and segment-length softmax.
//
// Shot features are columns of a feature_dim x n matrix. Each shot is embedded
// as z = relu(U relu(V f)); the step kernel is the Gram matrix of W z over the
// step's ground set. The length head is a softmax over the length menu with
// logits w_l . pooled + b_l, where `pooled` is a coordinatewise max over raw
// shot features.
//
// All gradients are analytic (hand-written reverse mode).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyseqdpp/dpp.hpp"
#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/random.hpp"

namespace dyseqdpp {

inline constexpr int kMaxSegmentLength = 20;

// Admissible segment lengths, strictly increasing, each in [1, 20].
class LengthMenu {
 public:
  LengthMenu() : LengthMenu(range(5, 15)) {}

  explicit LengthMenu(std::vector<int> lengths) : lengths_(std::move(lengths)) {
    if (lengths_.empty()) throw InvalidInput("length menu is empty");
    for (std::size_t i = 0; i < lengths_.size(); ++i) {
      if (lengths_[i] < 1 || lengths_[i] > kMaxSegmentLength)
        throw InvalidInput("segment length out of range: " + std::to_string(lengths_[i]));
      if (i > 0 && lengths_[i] <= lengths_[i - 1]) throw InvalidInput("length menu must be strictly increasing");
    }
  }

  static std::vector<int> range(int lo, int hi) {
    std::vector<int> out;
    for (int l = lo; l <= hi; ++l) out.push_back(l);
    return out;
  }

  std::size_t size() const { return lengths_.size(); }
  int operator[](std::size_t i) const { return lengths_[i]; }
  const std::vector<int>& lengths() const { return lengths_; }

  std::optional<std::size_t> index_of(int length) const {
    const auto it = std::lower_bound(lengths_.begin(), lengths_.end(), length);
    if (it == lengths_.end() || *it != length) return std::nullopt;
    return static_cast<std::size_t>(it - lengths_.begin());
  }

  bool contains(int length) const { return index_of(length).has_value(); }

  friend bool operator==(const LengthMenu&, const LengthMenu&) = default;

 private:
  std::vector<int> lengths_;
};

struct NetDims {
  int feature_dim = 64;
  int hidden1 = 256;
  int hidden2 = 128;
  int kernel_dim = 128;
};

// The trainable tensors. Shared by the parameters themselves and by their
// gradients so both support the same arithmetic and flattening.
struct ParamTensors {
  Eigen::MatrixXd V;               // hidden1 x feature_dim
  Eigen::MatrixXd U;               // hidden2 x hidden1
  Eigen::MatrixXd W;               // kernel_dim x hidden2
  Eigen::MatrixXd length_weights;  // |menu| x feature_dim, row k scores menu[k]
  Eigen::VectorXd length_bias;     // |menu|

  Eigen::Index num_values() const {
    return V.size() + U.size() + W.size() + length_weights.size() + length_bias.size();
  }

  template <typename Fn>
  void for_each_block(Fn&& fn) {
    fn(V.data(), V.size());
    fn(U.data(), U.size());
    fn(W.data(), W.size());
    fn(length_weights.data(), length_weights.size());
    fn(length_bias.data(), length_bias.size());
  }

  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    fn(V.data(), V.size());
    fn(U.data(), U.size());
    fn(W.data(), W.size());
    fn(length_weights.data(), length_weights.size());
    fn(length_bias.data(), length_bias.size());
  }

  Eigen::VectorXd to_vector() const {
    Eigen::VectorXd out(num_values());
    Eigen::Index at = 0;
    for_each_block([&](const double* p, Eigen::Index n) {
      out.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(p, n);
      at += n;
    });
    return out;
  }

  void assign_from_vector(const Eigen::VectorXd& v) {
    if (v.size() != num_values()) throw ShapeError("parameter vector has wrong length");
    Eigen::Index at = 0;
    for_each_block([&](double* p, Eigen::Index n) {
      Eigen::Map<Eigen::VectorXd>(p, n) = v.segment(at, n);
      at += n;
    });
  }

  bool all_finite() const {
    return V.allFinite() && U.allFinite() && W.allFinite() && length_weights.allFinite() && length_bias.allFinite();
  }

  double squared_norm() const {
    return V.squaredNorm() + U.squaredNorm() + W.squaredNorm() + length_weights.squaredNorm() +
           length_bias.squaredNorm();
  }

  void set_zero_like(const ParamTensors& other) {
    V = Eigen::MatrixXd::Zero(other.V.rows(), other.V.cols());
    U = Eigen::MatrixXd::Zero(other.U.rows(), other.U.cols());
    W = Eigen::MatrixXd::Zero(other.W.rows(), other.W.cols());
    length_weights = Eigen::MatrixXd::Zero(other.length_weights.rows(), other.length_weights.cols());
    length_bias = Eigen::VectorXd::Zero(other.length_bias.size());
  }

  void add_scaled(const ParamTensors& other, double scale) {
    V += scale * other.V;
    U += scale * other.U;
    W += scale * other.W;
    length_weights += scale * other.length_weights;
    length_bias += scale * other.length_bias;
  }

  void scale(double s) {
    V *= s;
    U *= s;
    W *= s;
    length_weights *= s;
    length_bias *= s;
  }

  friend bool operator==(const ParamTensors& a, const ParamTensors& b) {
    auto same = [](const auto& x, const auto& y) {
      return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    return same(a.V, b.V) && same(a.U, b.U) && same(a.W, b.W) && same(a.length_weights, b.length_weights) &&
           same(a.length_bias, b.length_bias);
  }
};

struct ParamGradient : ParamTensors {
  static ParamGradient zeros_like(const ParamTensors& p) {
    ParamGradient g;
    g.set_zero_like(p);
    return g;
  }
  double norm() const { return std::sqrt(squared_norm()); }
};

struct PolicyParams : ParamTensors {
  LengthMenu menu;

  int feature_dim() const { return static_cast<int>(V.cols()); }
  int hidden1() const { return static_cast<int>(V.rows()); }
  int hidden2() const { return static_cast<int>(U.rows()); }
  int kernel_dim() const { return static_cast<int>(W.rows()); }
  NetDims dims() const { return {feature_dim(), hidden1(), hidden2(), kernel_dim()}; }

  // Throws ShapeError unless all tensors agree with each other and the menu.
  void validate() const {
    if (U.cols() != V.rows() || W.cols() != U.rows() || length_weights.cols() != V.cols() ||
        length_weights.rows() != static_cast<Eigen::Index>(menu.size()) ||
        length_bias.size() != static_cast<Eigen::Index>(menu.size()))
      throw ShapeError("policy parameter shapes are inconsistent");
    if (!all_finite()) throw NumericalFailure("policy parameters contain non-finite values");
  }

  // Glorot-uniform weights, zero length biases.
  static PolicyParams init(const NetDims& dims, LengthMenu menu, Rng& rng) {
    if (dims.feature_dim < 1 || dims.hidden1 < 1 || dims.hidden2 < 1 || dims.kernel_dim < 1)
      throw InvalidInput("network dimensions must be positive");
    PolicyParams p;
    p.menu = std::move(menu);
    auto glorot = [&rng](int rows, int cols) {
      const double a = std::sqrt(6.0 / (rows + cols));
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-a, a);
      return m;
    };
    p.V = glorot(dims.hidden1, dims.feature_dim);
    p.U = glorot(dims.hidden2, dims.hidden1);
    p.W = glorot(dims.kernel_dim, dims.hidden2);
    p.length_weights = glorot(static_cast<int>(p.menu.size()), dims.feature_dim);
    p.length_bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.menu.size()));
    return p;
  }
};

// Intermediate activations kept for the backward pass; columns are shots.
struct KernelForward {
  Eigen::MatrixXd features;
  Eigen::MatrixXd pre1, hidden1;
  Eigen::MatrixXd pre2, z;
  Eigen::MatrixXd phi;  // W z
  LKernel kernel;
};

inline KernelForward kernel_forward(const PolicyParams& params, const Eigen::MatrixXd& features) {
  if (features.rows() != params.V.cols())
    throw ShapeError("feature dimension " + std::to_string(features.rows()) + " does not match model dimension " +
                     std::to_string(params.V.cols()));
  KernelForward fw;
  fw.features = features;
  fw.pre1 = params.V * features;
  fw.hidden1 = fw.pre1.cwiseMax(0.0);
  fw.pre2 = params.U * fw.hidden1;
  fw.z = fw.pre2.cwiseMax(0.0);
  fw.phi = params.W * fw.z;
  fw.kernel = LKernel::gram(fw.phi);
  return fw;
}

inline Eigen::VectorXd embed(const PolicyParams& params, const Eigen::VectorXd& f) {
  if (f.size() != params.V.cols()) throw ShapeError("feature dimension mismatch");
  return (params.U * (params.V * f).cwiseMax(0.0)).cwiseMax(0.0);
}

inline LKernel build_kernel(const PolicyParams& params, const Eigen::MatrixXd& features) {
  if (features.cols() == 0) throw ShapeError("empty feature list");
  return kernel_forward(params, features).kernel;
}

namespace detail {

// log det of a principal block of a PSD kernel; -infinity if the block is
// numerically singular under the relative zero-determinant tolerance.
inline double log_det_psd_block(const Eigen::MatrixXd& m, Subset s) {
  const Eigen::MatrixXd sub = principal_submatrix(m, s);
  if (sub.size() == 0) return 0.0;
  double log_diag = 0.0;
  for (Eigen::Index i = 0; i < sub.rows(); ++i) {
    if (!(sub(i, i) > 0.0)) return -std::numeric_limits<double>::infinity();
    log_diag += std::log(sub(i, i));
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sub);
  const Eigen::MatrixXd& packed = lu.matrixLU();
  double log_abs = 0.0;
  int sign = lu.permutationP().determinant();
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double u = packed(i, i);
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    if (u < 0.0) sign = -sign;
    log_abs += std::log(std::abs(u));
  }
  if (sign < 0 || log_abs - log_diag <= std::log(kZeroDetRelTolerance)) return -std::numeric_limits<double>::infinity();
  return log_abs;
}

inline double log_cond_from_kernel(const LKernel& kernel, Subset x_t, Subset x_prev) {
  detail::check_subset(x_t, kernel.size());
  detail::check_subset(x_prev, kernel.size());
  if ((x_t & x_prev) != 0) throw InvalidSubset("selected subset overlaps conditioning set");
  const double log_num = log_det_psd_block(kernel.matrix(), x_t | x_prev);
  if (!std::isfinite(log_num)) return -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd shifted = kernel.matrix();
  for (Eigen::Index i = 0; i < shifted.rows(); ++i)
    if (((x_prev >> i) & 1u) == 0) shifted(i, i) += 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(shifted);
  const double det = lu.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) throw NumericalFailure("conditional normalizer is not positive");
  double log_den = 0.0;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) log_den += std::log(std::abs(lu.matrixLU()(i, i)));
  return log_num - log_den;
}

}  // namespace detail

// log P(x_t | x_prev) for the conditional DPP over the ground set whose
// features are the columns of `ground_features`. Items in `x_prev` are the
// previous step's selections; all others form the current segment.
inline double log_cond_prob(const PolicyParams& params, const Eigen::MatrixXd& ground_features, Subset x_t,
                            Subset x_prev) {
  return detail::log_cond_from_kernel(build_kernel(params, ground_features), x_t, x_prev);
}

// Gradient of log_cond_prob. Uses d log det(A) / dA = A^{-1} for the
// numerator block and the shifted denominator, then back-propagates through
// the Gram construction and both ReLU layers.
inline ParamGradient grad_log_cond_prob(const PolicyParams& params, const Eigen::MatrixXd& ground_features,
                                        Subset x_t, Subset x_prev) {
  const KernelForward fw = kernel_forward(params, ground_features);
  const Eigen::MatrixXd& l = fw.kernel.matrix();
  const Eigen::Index m = l.rows();
  detail::check_subset(x_t, m);
  detail::check_subset(x_prev, m);
  if ((x_t & x_prev) != 0) throw InvalidSubset("selected subset overlaps conditioning set");

  const Subset chosen = x_t | x_prev;
  if (!std::isfinite(detail::log_det_psd_block(l, chosen)))
    throw SingularKernel("restricted kernel is singular; log-probability is -infinity");

  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(m, m);
  const std::vector<int> idx = subset_members(chosen);
  if (!idx.empty()) {
    const Eigen::MatrixXd inv = principal_submatrix(l, chosen).inverse();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < idx.size(); ++c)
        sens(idx[r], idx[c]) += inv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  Eigen::MatrixXd shifted = l;
  for (Eigen::Index i = 0; i < m; ++i)
    if (((x_prev >> i) & 1u) == 0) shifted(i, i) += 1.0;
  sens -= shifted.inverse();
  sens = 0.5 * (sens + sens.transpose());

  ParamGradient g = ParamGradient::zeros_like(params);
  const Eigen::MatrixXd d_phi = 2.0 * fw.phi * sens;
  g.W = d_phi * fw.z.transpose();
  const Eigen::MatrixXd d_pre2 = (params.W.transpose() * d_phi).cwiseProduct((fw.pre2.array() > 0.0).cast<double>().matrix());
  g.U = d_pre2 * fw.hidden1.transpose();
  const Eigen::MatrixXd d_pre1 = (params.U.transpose() * d_pre2).cwiseProduct((fw.pre1.array() > 0.0).cast<double>().matrix());
  g.V = d_pre1 * fw.features.transpose();
  return g;
}

// Coordinatewise max over the union of the columns of both matrices.
inline Eigen::VectorXd phi_pool(const Eigen::MatrixXd& selected, const Eigen::MatrixXd& segment) {
  if (selected.cols() == 0 && segment.cols() == 0) throw InvalidInput("cannot pool an empty set of shots");
  if (selected.cols() > 0 && segment.cols() > 0 && selected.rows() != segment.rows())
    throw ShapeError("pooled feature dimensions disagree");
  const Eigen::Index d = selected.cols() > 0 ? selected.rows() : segment.rows();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
  if (selected.cols() > 0) out = out.cwiseMax(selected.rowwise().maxCoeff());
  if (segment.cols() > 0) out = out.cwiseMax(segment.rowwise().maxCoeff());
  return out;
}

// Softmax over the length menu; index k is the probability of menu[k].
inline Eigen::VectorXd length_distribution(const PolicyParams& params, const Eigen::VectorXd& pooled) {
  if (pooled.size() != params.length_weights.cols()) throw ShapeError("pooled feature dimension mismatch");
  Eigen::VectorXd logits = params.length_weights * pooled + params.length_bias;
  logits.array() -= logits.maxCoeff();
  Eigen::VectorXd p = logits.array().exp();
  return p / p.sum();
}

inline double log_length_prob(const PolicyParams& params, const Eigen::VectorXd& pooled, int length) {
  const auto k = params.menu.index_of(length);
  if (!k) throw InvalidLength("length " + std::to_string(length) + " is not in the menu");
  Eigen::VectorXd logits = params.length_weights * pooled + params.length_bias;
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return logits(static_cast<Eigen::Index>(*k)) - lse;
}

// d log softmax(length) / d(weights, biases) = (indicator - p) [pooled, 1].
// The kernel tensors get zero: pooling reads raw features, not embeddings.
inline ParamGradient grad_log_length_prob(const PolicyParams& params, const Eigen::VectorXd& pooled, int length) {
  const auto k = params.menu.index_of(length);
  if (!k) throw InvalidLength("length " + std::to_string(length) + " is not in the menu");
  ParamGradient g = ParamGradient::zeros_like(params);
  Eigen::VectorXd coef = -length_distribution(params, pooled);
  coef(static_cast<Eigen::Index>(*k)) += 1.0;
  g.length_weights = coef * pooled.transpose();
  g.length_bias = coef;
  return g;
}

}  // namespace dyseqdpp
