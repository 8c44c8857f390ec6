// fsv/backend.hpp

// Copyright 2026 The fsv Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "fsv/common.hpp"

namespace fsv {

inline double cosine_score(const Vector &e, const Vector &t) {
  require_dims(e.size() == t.size(), "cosine_score: dimension mismatch");
  const double ne = e.norm(), nt = t.norm();
  if (ne <= 0 || nt <= 0) throw DegenerateError("cosine_score: zero vector");
  return std::clamp(e.dot(t) / (ne * nt), -1.0, 1.0);
}

namespace detail {

inline bool rank_deficient(const Matrix &c) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  return ev.minCoeff() <= 1e-10 * std::max(ev.maxCoeff(), 1e-300);
}

inline double ridge_for(const Matrix &c, double factor) {
  return factor * c.trace() / static_cast<double>(c.rows());
}

}  // namespace detail

/// Correlation alignment: source rows x map to x' A so that their covariance
/// matches the target covariance.
struct CoralTransform {
  Matrix a;
  Matrix source_cov;  // regularised
  Matrix target_cov;  // regularised
  double source_ridge = 0.0;
  double target_ridge = 0.0;
  bool source_degenerate = false;
  bool target_degenerate = false;

  Index dim() const { return a.rows(); }

  Matrix apply(const Matrix &x) const {
    require_dims(x.cols() == dim(), "coral: dimension mismatch");
    return x * a;
  }

  /// |A' C_S A - C_T|_F / |C_T|_F on the stored covariances.
  double residual() const {
    return (a.transpose() * source_cov * a - target_cov).norm() / target_cov.norm();
  }
};

/// `ridge_factor` scales the alpha I term (alpha = factor * trace(C) / D).
inline CoralTransform coral_fit(const Matrix &source, const Matrix &target,
                                double ridge_factor = 1e-3) {
  require_dims(source.cols() == target.cols(), "coral: source/target dimension mismatch");
  require(ridge_factor >= 0, "coral: ridge factor must be >= 0");
  if (source.rows() < 2 || target.rows() < 2) throw DegenerateError("coral: need at least 2 vectors per side");
  CoralTransform t;
  t.source_cov = covariance(source);
  t.target_cov = covariance(target);
  t.source_degenerate = detail::rank_deficient(t.source_cov);
  t.target_degenerate = detail::rank_deficient(t.target_cov);
  t.source_ridge = detail::ridge_for(t.source_cov, ridge_factor);
  t.target_ridge = detail::ridge_for(t.target_cov, ridge_factor);
  // A degenerate side always gets some ridge, even when the factor is zero.
  if (t.source_degenerate && t.source_ridge <= 0) t.source_ridge = detail::ridge_for(t.source_cov, 1e-3);
  if (t.target_degenerate && t.target_ridge <= 0) t.target_ridge = detail::ridge_for(t.target_cov, 1e-3);
  if (!(t.source_cov.trace() > 0) || !(t.target_cov.trace() > 0))
    throw DegenerateError("coral: zero-variance embeddings");
  t.source_cov.diagonal().array() += t.source_ridge;
  t.target_cov.diagonal().array() += t.target_ridge;
  t.a = spd_power(t.source_cov, -0.5) * spd_power(t.target_cov, 0.5);
  return t;
}

/// Symmetric (ZCA) whitening.
struct Whitener {
  Vector mean;
  Matrix transform;  // y = transform (x - mean)
  double ridge = 0.0;

  Index dim() const { return mean.size(); }

  static Whitener fit(const Matrix &data) {
    if (data.rows() < 2) throw DegenerateError("whitener: need at least 2 vectors");
    Whitener w;
    Matrix c = covariance(data, &w.mean);
    if (!(c.trace() > 0)) throw DegenerateError("whitener: zero-variance data");
    if (detail::rank_deficient(c)) {
      w.ridge = detail::ridge_for(c, 1e-3);
      c.diagonal().array() += w.ridge;
    }
    w.transform = spd_power(c, -0.5);
    return w;
  }

  Vector apply(const Vector &x) const {
    require_dims(x.size() == dim(), "whitener: dimension mismatch");
    return transform * (x - mean);
  }

  Matrix apply_rows(const Matrix &x) const {
    require_dims(x.cols() == dim(), "whitener: dimension mismatch");
    return (x.rowwise() - mean.transpose()) * transform.transpose();
  }
};

inline Vector whiten_and_lnorm(const Whitener &w, const Vector &x) {
  const Vector y = w.apply(x);
  const double n = y.norm();
  if (n <= 0) throw DegenerateError("whiten_and_lnorm: vector equals the whitening mean");
  return y / n;
}

inline Matrix whiten_and_lnorm_rows(const Whitener &w, const Matrix &x) {
  Matrix y = w.apply_rows(x);
  for (Index i = 0; i < y.rows(); ++i) {
    const double n = y.row(i).norm();
    if (n <= 0) throw DegenerateError("whiten_and_lnorm: vector equals the whitening mean");
    y.row(i) /= n;
  }
  return y;
}

/// x = mu + F h + e, h ~ N(0, I), e ~ N(0, Sigma).
struct PldaModel {
  Vector mu;
  Matrix f;      // D x R
  Matrix sigma;  // D x D

  Index dim() const { return mu.size(); }
  Index rank() const { return f.cols(); }

  void validate() const {
    require_dims(f.rows() == dim() && sigma.rows() == dim() && sigma.cols() == dim(),
                 "plda: inconsistent shapes");
    require_dims(rank() <= dim(), "plda: rank exceeds dimension");
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw DegenerateError("plda: Sigma not positive definite");
  }
};

struct PldaConfig {
  Index rank = 0;  // 0 = min(D, speakers - 1)
  int iterations = 10;

  void validate() const {
    require(rank >= 0, "plda: rank must be >= 0");
    require(iterations >= 0, "plda: iterations must be >= 0");
  }
};

struct PldaTrainResult {
  PldaModel model;
  std::vector<double> log_likelihood;  // initial model, then after each iteration
};

namespace detail {

struct SpeakerGroups {
  std::vector<std::vector<Index>> members;
  std::vector<Vector> sums;  // of centred vectors
};

inline SpeakerGroups group_by_speaker(const Matrix &xc, const std::vector<int> &labels) {
  std::map<int, std::size_t> slot;
  SpeakerGroups g;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = slot.emplace(labels[i], g.members.size());
    if (inserted) {
      g.members.emplace_back();
      g.sums.push_back(Vector::Zero(xc.cols()));
    }
    g.members[it->second].push_back(static_cast<Index>(i));
    g.sums[it->second] += xc.row(static_cast<Index>(i)).transpose();
  }
  return g;
}

inline double log_det_spd(const Eigen::LLT<Matrix> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Marginal log-likelihood of centred data under (F, Sigma), plus the
/// per-speaker posterior moments when requested.
inline double plda_marginal(const Matrix &xc, const SpeakerGroups &g, const Matrix &f,
                            const Matrix &sigma, std::vector<Vector> *h_mean = nullptr,
                            std::vector<Matrix> *h_cov = nullptr) {
  const Index d = xc.cols(), r = f.cols();
  Eigen::LLT<Matrix> sl(sigma);
  if (sl.info() != Eigen::Success) throw TrainingError("plda: Sigma lost positive definiteness");
  const Matrix sinv_f = sl.solve(f);
  const Matrix ftsf = f.transpose() * sinv_f;
  const double log_det_s = log_det_spd(sl);
  const double n = static_cast<double>(xc.rows());
  const Matrix z = sl.matrixL().solve(xc.transpose());
  double ll = -0.5 * (n * (d * std::log(2.0 * kPi) + log_det_s) + z.squaredNorm());
  if (h_mean) h_mean->clear();
  if (h_cov) h_cov->clear();
  for (std::size_t s = 0; s < g.members.size(); ++s) {
    const double ns = static_cast<double>(g.members[s].size());
    Matrix p = Matrix::Identity(r, r) + ns * ftsf;
    Eigen::LLT<Matrix> pl(p);
    const Vector b = sinv_f.transpose() * g.sums[s];
    const Vector h = pl.solve(b);
    ll += 0.5 * b.dot(h) - 0.5 * log_det_spd(pl);
    if (h_mean) h_mean->push_back(h);
    if (h_cov) h_cov->push_back(pl.solve(Matrix::Identity(r, r)));
  }
  return ll;
}

}  // namespace detail

/// EM for Gaussian PLDA with full residual covariance; mu is the data mean.
inline PldaTrainResult plda_train_em(const Matrix &x, const std::vector<int> &labels,
                                     const PldaConfig &cfg) {
  cfg.validate();
  require_dims(x.rows() == static_cast<Index>(labels.size()), "plda: label count != vectors");
  const Index n = x.rows(), d = x.cols();
  Vector mu;
  if (n < 2) throw DegenerateError("plda: need at least 2 vectors");
  covariance(x, &mu);
  const Matrix xc = x.rowwise() - mu.transpose();
  const auto groups = detail::group_by_speaker(xc, labels);
  const auto speakers = static_cast<Index>(groups.members.size());
  if (speakers < 2) throw DegenerateError("plda: need at least 2 speakers");
  bool multi = false;
  for (const auto &m : groups.members) multi = multi || m.size() >= 2;
  if (!multi)
    throw DegenerateError("plda: every speaker has a single session; within/between variability not separable");
  const Index r = cfg.rank > 0 ? cfg.rank : std::min(d, speakers - 1);
  require(r <= d, "plda: rank exceeds dimension");

  // Initialise from within- and between-speaker scatter.
  Matrix sw = Matrix::Zero(d, d), sb = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < groups.members.size(); ++s) {
    const double ns = static_cast<double>(groups.members[s].size());
    const Vector m = groups.sums[s] / ns;
    sb += ns * m * m.transpose();
    for (Index i : groups.members[s]) {
      const Vector r_i = xc.row(i).transpose() - m;
      sw += r_i * r_i.transpose();
    }
  }
  sw /= static_cast<double>(n);
  sb /= static_cast<double>(n);
  if (detail::rank_deficient(sw)) sw.diagonal().array() += detail::ridge_for(sw, 1e-6);
  // Leading generalised eigenvectors of (Sb, Sw); invariant to linear maps of the data.
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(sb, sw);
  Matrix f(d, r);
  for (Index k = 0; k < r; ++k)
    f.col(k) = sw * es.eigenvectors().col(d - 1 - k) *
               std::sqrt(std::max(es.eigenvalues()(d - 1 - k), 1e-6));

  PldaTrainResult out;
  Matrix sigma = sw;
  const Matrix xx = xc.transpose() * xc;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<Vector> hm;
    std::vector<Matrix> hc;
    out.log_likelihood.push_back(detail::plda_marginal(xc, groups, f, sigma, &hm, &hc));
    Matrix lhs = Matrix::Zero(r, r), cross = Matrix::Zero(d, r);
    for (std::size_t s = 0; s < groups.members.size(); ++s) {
      const double ns = static_cast<double>(groups.members[s].size());
      lhs += ns * (hc[s] + hm[s] * hm[s].transpose());
      cross += groups.sums[s] * hm[s].transpose();
    }
    f = lhs.ldlt().solve(cross.transpose()).transpose();
    sigma = (xx - f * cross.transpose()) / static_cast<double>(n);
    sigma = 0.5 * (sigma + sigma.transpose());
    if (!f.allFinite() || !sigma.allFinite()) throw TrainingError("plda: non-finite parameters");
  }
  out.log_likelihood.push_back(detail::plda_marginal(xc, groups, f, sigma));
  out.model = PldaModel{mu, f, sigma};
  out.model.validate();
  return out;
}

/// Precomputed two-covariance LLR scorer.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel &m) : mu_(m.mu) {
    m.validate();
    const Index d = m.dim();
    const Matrix b = m.f * m.f.transpose();
    const Matrix t = b + m.sigma;
    Matrix same(2 * d, 2 * d);
    same << t, b, b, t;
    Eigen::LLT<Matrix> sl(same), tl(t);
    if (sl.info() != Eigen::Success || tl.info() != Eigen::Success)
      throw DegenerateError("plda: covariance not positive definite");
    const Matrix same_inv = sl.solve(Matrix::Identity(2 * d, 2 * d));
    const Matrix t_inv = tl.solve(Matrix::Identity(d, d));
    k11_ = same_inv.topLeftCorner(d, d) - t_inv;
    k22_ = same_inv.bottomRightCorner(d, d) - t_inv;
    k12_ = same_inv.topRightCorner(d, d);
    offset_ = -0.5 * (detail::log_det_spd(sl) - 2.0 * detail::log_det_spd(tl));
  }

  Index dim() const { return mu_.size(); }

  double operator()(const Vector &e, const Vector &t) const {
    require_dims(e.size() == dim() && t.size() == dim(), "plda_llr: dimension mismatch");
    const Vector a = e - mu_, c = t - mu_;
    return offset_ - 0.5 * (a.dot(k11_ * a) + c.dot(k22_ * c) + 2.0 * a.dot(k12_ * c));
  }

 private:
  Vector mu_;
  Matrix k11_, k22_, k12_;
  double offset_ = 0.0;
};

inline double plda_llr(const PldaModel &model, const Vector &enroll, const Vector &test) {
  return PldaScorer(model)(enroll, test);
}

}  // namespace fsv
