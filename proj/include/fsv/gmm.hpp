// fsv/gmm.hpp

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
#include <limits>
#include <numeric>
#include <vector>

#include "fsv/common.hpp"
#include "fsv/feature_matrix.hpp"

namespace fsv {

/// Full-covariance Gaussian mixture used as universal background model.
class GmmUbm {
 public:
  GmmUbm() = default;
  GmmUbm(Vector weights, Matrix means, std::vector<Matrix> covariances)
      : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
    prepare();
  }

  Index num_components() const { return weights_.size(); }
  Index dim() const { return means_.cols(); }
  const Vector &weights() const { return weights_; }
  const Matrix &means() const { return means_; }
  const std::vector<Matrix> &covariances() const { return covs_; }
  const Matrix &precision(Index c) const { return precisions_[c]; }

  void validate() const {
    const Index c = weights_.size();
    require_dims(c > 0 && means_.rows() == c && static_cast<Index>(covs_.size()) == c,
                 "gmm: inconsistent component count");
    if (std::abs(weights_.sum() - 1.0) > 1e-10 || weights_.minCoeff() < 0)
      throw DegenerateError("gmm: weights are not on the simplex");
    for (const auto &s : covs_) {
      require_dims(s.rows() == dim() && s.cols() == dim(), "gmm: covariance shape");
      if ((s - s.transpose()).norm() > 1e-9 * s.norm()) throw DegenerateError("gmm: asymmetric covariance");
    }
  }

  /// log(w_c N(x_t; mu_c, S_c)) for every frame (rows) and component (cols).
  Matrix log_joint(const Matrix &x) const {
    require_dims(x.cols() == dim(), "gmm: feature dim " + std::to_string(x.cols()) +
                                        " != model dim " + std::to_string(dim()));
    const Index c_count = num_components();
    Matrix out(x.rows(), c_count);
    for (Index c = 0; c < c_count; ++c) {
      Matrix centered = (x.rowwise() - means_.row(c)).transpose();
      chol_[c].matrixL().solveInPlace(centered);
      out.col(c) = (-0.5 * centered.colwise().squaredNorm().transpose()).array() + log_const_(c);
    }
    return out;
  }

  /// Frame posteriors; optionally returns per-frame log-likelihoods.
  Matrix posteriors(const Matrix &x, Vector *frame_loglik = nullptr) const {
    Matrix lj = log_joint(x);
    Vector ll(x.rows());
    for (Index t = 0; t < x.rows(); ++t) {
      ll(t) = log_sum_exp(lj.row(t).transpose());
      lj.row(t) = (lj.row(t).array() - ll(t)).exp().matrix();
    }
    if (frame_loglik) *frame_loglik = std::move(ll);
    return lj;
  }

  double log_likelihood(const Matrix &x) const {
    Vector ll;
    posteriors(x, &ll);
    return ll.sum();
  }

 private:
  void prepare() {
    validate();
    const Index c_count = num_components();
    chol_.clear();
    precisions_.clear();
    log_const_.resize(c_count);
    for (Index c = 0; c < c_count; ++c) {
      Eigen::LLT<Matrix> llt(covs_[c]);
      if (llt.info() != Eigen::Success) throw DegenerateError("gmm: covariance not positive definite");
      const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      log_const_(c) = std::log(weights_(c)) - 0.5 * (dim() * std::log(2.0 * kPi) + log_det);
      precisions_.push_back(llt.solve(Matrix::Identity(dim(), dim())));
      chol_.push_back(std::move(llt));
    }
  }

  Vector weights_;
  Matrix means_;
  std::vector<Matrix> covs_;
  std::vector<Eigen::LLT<Matrix>> chol_;
  std::vector<Matrix> precisions_;
  Vector log_const_;
};

struct UbmConfig {
  int components = 64;
  int iterations = 20;
  double floor_factor = 1e-4;  // eigenvalue floor relative to mean data variance
  std::uint64_t seed = 0;
  Index kmeans_subsample = 20000;
  int kmeans_iterations = 10;

  void validate() const {
    require(components >= 1, "ubm: components must be >= 1");
    require(iterations >= 0, "ubm: iterations must be >= 0");
    require(floor_factor > 0, "ubm: floor factor must be positive");
    require(kmeans_subsample >= components, "ubm: k-means subsample smaller than component count");
  }
};

struct UbmTrainResult {
  GmmUbm ubm;
  std::vector<double> log_likelihood;  // initial model, then after each iteration
  int floored_eigenvalues = 0;         // in the final M-step
};

namespace detail {

inline Matrix stack_frames(const std::vector<FeatureMatrix> &features) {
  require(!features.empty(), "no feature matrices");
  const Index d = features.front().frames.cols();
  Index total = 0;
  for (const auto &f : features) {
    require_dims(f.frames.cols() == d, "feature matrices have different dimensions");
    total += f.frames.rows();
  }
  Matrix x(total, d);
  Index r = 0;
  for (const auto &f : features) {
    x.middleRows(r, f.frames.rows()) = f.frames;
    r += f.frames.rows();
  }
  return x;
}

/// Eigenvalue floor; returns the number of clipped eigenvalues.
inline int floor_covariance(Matrix &s, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  Vector ev = es.eigenvalues();
  int clipped = 0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) < floor) {
      ev(i) = floor;
      ++clipped;
    }
  s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  s = 0.5 * (s + s.transpose());
  return clipped;
}

/// k-means++ seeding and Lloyd iterations; returns centroids and assignment.
inline Matrix kmeans(const Matrix &x, int k, int iterations, Rng &rng,
                     std::vector<Index> *assignment) {
  const Index n = x.rows();
  Matrix centroids(k, x.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centroids.row(0) = x.row(pick(rng));
  Vector d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index chosen = pick(rng);
    if (total > 0) {
      double r = u01(rng) * total;
      for (Index i = 0; i < n; ++i) {
        r -= d2(i);
        if (r <= 0) {
          chosen = i;
          break;
        }
      }
    }
    centroids.row(c) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  std::vector<Index> assign(n, 0);
  for (int it = 0; it <= iterations; ++it) {
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      (centroids.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      assign[i] = best;
    }
    if (it == iterations) break;
    Matrix sums = Matrix::Zero(k, x.cols());
    Vector counts = Vector::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += x.row(i);
      counts(assign[i]) += 1;
    }
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0) centroids.row(c) = sums.row(c) / counts(c);
  }
  if (assignment) *assignment = std::move(assign);
  return centroids;
}

}  // namespace detail

/// EM training of a full-covariance UBM on pooled frames.
inline UbmTrainResult ubm_train_em(const Matrix &x, const UbmConfig &cfg) {
  cfg.validate();
  const Index n = x.rows(), d = x.cols();
  const Index c_count = cfg.components;
  if (n < 10 * c_count * d)
    throw TooShortError("ubm: " + std::to_string(n) + " frames, need at least 10*C*D = " +
                        std::to_string(10 * c_count * d));
  if (!x.allFinite()) throw ConfigError("ubm: non-finite features");
  Vector global_mean;
  const Matrix global_cov = covariance(x, &global_mean);
  const double floor = cfg.floor_factor * global_cov.diagonal().mean();
  if (!(floor > 0)) throw DegenerateError("ubm: features have zero variance");

  Rng rng(cfg.seed);
  Matrix sub;
  if (n > cfg.kmeans_subsample) {
    std::vector<Index> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<Index> chosen;
    std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), cfg.kmeans_subsample, rng);
    sub.resize(cfg.kmeans_subsample, d);
    for (Index i = 0; i < cfg.kmeans_subsample; ++i) sub.row(i) = x.row(chosen[i]);
  } else {
    sub = x;
  }
  std::vector<Index> assign;
  Matrix means = detail::kmeans(sub, static_cast<int>(c_count), cfg.kmeans_iterations, rng, &assign);
  Vector weights = Vector::Zero(c_count);
  std::vector<Matrix> covs(c_count, Matrix::Zero(d, d));
  for (Index i = 0; i < sub.rows(); ++i) {
    const Index c = assign[i];
    weights(c) += 1;
    const RowVector r = sub.row(i) - means.row(c);
    covs[c] += r.transpose() * r;
  }
  for (Index c = 0; c < c_count; ++c) {
    if (weights(c) > d) covs[c] /= weights(c);
    else covs[c] = global_cov;
    weights(c) = std::max(weights(c), 1.0);
    detail::floor_covariance(covs[c], floor);
  }
  weights /= weights.sum();

  UbmTrainResult out;
  out.ubm = GmmUbm(weights, means, covs);
  for (int it = 0; it < cfg.iterations; ++it) {
    Vector ll;
    const Matrix gamma = out.ubm.posteriors(x, &ll);
    out.log_likelihood.push_back(ll.sum());
    const Vector occ = gamma.colwise().sum().transpose();
    const Matrix first = gamma.transpose() * x;
    Vector new_w = occ / static_cast<double>(n);
    Matrix new_means = out.ubm.means();
    std::vector<Matrix> new_covs = out.ubm.covariances();
    out.floored_eigenvalues = 0;
    for (Index c = 0; c < c_count; ++c) {
      // Components with almost no occupancy keep their previous parameters.
      if (occ(c) < 1e-3) continue;
      new_means.row(c) = first.row(c) / occ(c);
      Matrix centered = x.rowwise() - new_means.row(c);
      Matrix weighted = centered.array().colwise() * gamma.col(c).array();
      Matrix s = weighted.transpose() * centered / occ(c);
      out.floored_eigenvalues += detail::floor_covariance(s, floor);
      new_covs[c] = std::move(s);
    }
    new_w /= new_w.sum();
    out.ubm = GmmUbm(new_w, new_means, new_covs);
  }
  out.log_likelihood.push_back(out.ubm.log_likelihood(x));
  return out;
}

inline UbmTrainResult ubm_train_em(const std::vector<FeatureMatrix> &features,
                                   const UbmConfig &cfg) {
  return ubm_train_em(detail::stack_frames(features), cfg);
}

}  // namespace fsv
