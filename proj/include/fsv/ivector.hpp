// fsv/ivector.hpp

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

#include <vector>

#include "fsv/embedding.hpp"
#include "fsv/gmm.hpp"

namespace fsv {

/// Zero- and first-order Baum-Welch statistics of one utterance.
struct BwStats {
  Vector zero_order;   // C
  Matrix first_order;  // C x D
  bool centered = false;

  Index num_components() const { return zero_order.size(); }
  Index dim() const { return first_order.cols(); }
  double frames() const { return zero_order.sum(); }

  static BwStats zeros(Index c, Index d) {
    return {Vector::Zero(c), Matrix::Zero(c, d), false};
  }

  BwStats &operator+=(const BwStats &o) {
    require_dims(o.zero_order.size() == zero_order.size() && o.first_order.cols() == dim(),
                 "bw stats: shape mismatch");
    if (o.centered != centered) throw ConfigError("bw stats: cannot merge centered and raw stats");
    zero_order += o.zero_order;
    first_order += o.first_order;
    return *this;
  }

  /// First-order stats around the UBM means: F_c - N_c mu_c.
  BwStats centered_on(const GmmUbm &ubm) const {
    require_dims(num_components() == ubm.num_components() && dim() == ubm.dim(),
                 "bw stats do not match the UBM");
    if (centered) return *this;
    BwStats out = *this;
    out.first_order -= zero_order.asDiagonal() * ubm.means();
    out.centered = true;
    return out;
  }
};

inline BwStats accumulate_bw_stats(const GmmUbm &ubm, const Matrix &frames) {
  require_dims(frames.cols() == ubm.dim(), "bw stats: feature dim " +
                                               std::to_string(frames.cols()) + " != UBM dim " +
                                               std::to_string(ubm.dim()));
  if (frames.rows() == 0) return BwStats::zeros(ubm.num_components(), ubm.dim());
  const Matrix gamma = ubm.posteriors(frames);
  return {gamma.colwise().sum().transpose(), gamma.transpose() * frames, false};
}

inline BwStats accumulate_bw_stats(const GmmUbm &ubm, const FeatureMatrix &features) {
  return accumulate_bw_stats(ubm, features.frames);
}

/// Low-rank total-variability subspace on top of a UBM.
class TotalVariabilityModel {
 public:
  TotalVariabilityModel() = default;
  TotalVariabilityModel(GmmUbm ubm, Matrix t) : ubm_(std::move(ubm)), t_(std::move(t)) {
    prepare();
  }

  const GmmUbm &ubm() const { return ubm_; }
  const Matrix &t() const { return t_; }
  Index rank() const { return t_.cols(); }
  Index num_components() const { return ubm_.num_components(); }
  Index dim() const { return ubm_.dim(); }
  auto block(Index c) const { return t_.middleRows(c * dim(), dim()); }

  struct Posterior {
    Vector mean;
    Matrix precision;  // I + sum_c N_c T_c' S_c^-1 T_c
    Eigen::LLT<Matrix> llt;
    Vector linear;  // sum_c T_c' S_c^-1 f_c
  };

  Posterior posterior(const BwStats &raw) const {
    const BwStats s = raw.centered_on(ubm_);
    Posterior p;
    p.precision = Matrix::Identity(rank(), rank());
    p.linear = Vector::Zero(rank());
    for (Index c = 0; c < num_components(); ++c) {
      p.precision.noalias() += s.zero_order(c) * tt_[c];
      p.linear.noalias() += tsinv_[c] * s.first_order.row(c).transpose();
    }
    p.llt.compute(p.precision);
    if (p.llt.info() != Eigen::Success) throw DegenerateError("ivector: posterior precision not SPD");
    p.mean = p.llt.solve(p.linear);
    return p;
  }

 private:
  void prepare() {
    require_dims(t_.rows() == num_components() * dim(), "tv: T rows must equal C*D");
    require(rank() >= 1 && rank() <= t_.rows(), "tv: rank must satisfy 1 <= R <= C*D");
    if (!t_.allFinite()) throw DegenerateError("tv: non-finite T");
    tsinv_.clear();
    tt_.clear();
    for (Index c = 0; c < num_components(); ++c) {
      Matrix ts = block(c).transpose() * ubm_.precision(c);
      tt_.push_back(ts * block(c));
      tsinv_.push_back(std::move(ts));
    }
  }

  GmmUbm ubm_;
  Matrix t_;
  std::vector<Matrix> tsinv_;  // T_c' S_c^-1, R x D
  std::vector<Matrix> tt_;     // T_c' S_c^-1 T_c, R x R
};

inline Embedding extract_ivector(const TotalVariabilityModel &tv, const BwStats &stats) {
  return {tv.posterior(stats).mean, "ivector", false};
}

struct TvConfig {
  int rank = 100;
  int iterations = 10;
  bool min_divergence = true;
  double init_scale = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    require(rank >= 1, "tv: rank must be >= 1");
    require(iterations >= 0, "tv: iterations must be >= 0");
    require(init_scale > 0, "tv: init scale must be positive");
  }
};

struct TvTrainResult {
  TotalVariabilityModel model;
  std::vector<double> objective;  // initial T, then after each iteration
};

/// sum_u 0.5 (b_u' w_u - log det L_u): log-likelihood of the stats up to T-free terms.
inline double tv_objective(const TotalVariabilityModel &tv, const std::vector<BwStats> &stats) {
  double acc = 0.0;
  for (const auto &s : stats) {
    auto p = tv.posterior(s);
    acc += 0.5 * (p.linear.dot(p.mean) -
                  2.0 * p.llt.matrixLLT().diagonal().array().log().sum());
  }
  return acc;
}

inline TvTrainResult train_tmatrix_em(const GmmUbm &ubm, const std::vector<BwStats> &raw_stats,
                                      const TvConfig &cfg) {
  cfg.validate();
  const Index c_count = ubm.num_components(), d = ubm.dim(), r = cfg.rank;
  require(r <= c_count * d, "tv: rank must not exceed C*D");
  if (static_cast<Index>(raw_stats.size()) < r)
    throw TooShortError("tv: " + std::to_string(raw_stats.size()) +
                        " utterances, need at least rank = " + std::to_string(r));
  std::vector<BwStats> stats;
  stats.reserve(raw_stats.size());
  for (const auto &s : raw_stats) stats.push_back(s.centered_on(ubm));

  Rng rng(cfg.seed);
  Matrix t(c_count * d, r);
  const Matrix noise = randn(c_count * d, r, rng);
  for (Index c = 0; c < c_count; ++c) {
    Eigen::LLT<Matrix> llt(ubm.covariances()[c]);
    t.middleRows(c * d, d) = cfg.init_scale * (Matrix(llt.matrixL()) * noise.middleRows(c * d, d));
  }
  TvTrainResult out;
  out.model = TotalVariabilityModel(ubm, t);
  const double utts = static_cast<double>(stats.size());
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<Matrix> a(c_count, Matrix::Zero(r, r));
    Matrix cacc = Matrix::Zero(c_count * d, r);
    Matrix second = Matrix::Zero(r, r);
    double objective = 0.0;
    for (const auto &s : stats) {
      auto p = out.model.posterior(s);
      objective += 0.5 * (p.linear.dot(p.mean) -
                          2.0 * p.llt.matrixLLT().diagonal().array().log().sum());
      const Matrix ww = p.llt.solve(Matrix::Identity(r, r)) + p.mean * p.mean.transpose();
      second += ww;
      for (Index c = 0; c < c_count; ++c) {
        if (s.zero_order(c) == 0) continue;
        a[c].noalias() += s.zero_order(c) * ww;
        cacc.middleRows(c * d, d).noalias() += s.first_order.row(c).transpose() * p.mean.transpose();
      }
    }
    out.objective.push_back(objective);
    Matrix new_t = out.model.t();
    for (Index c = 0; c < c_count; ++c) {
      Eigen::LDLT<Matrix> ldlt(a[c]);
      if (a[c].trace() <= 0) continue;
      new_t.middleRows(c * d, d) = ldlt.solve(cacc.middleRows(c * d, d).transpose()).transpose();
    }
    if (cfg.min_divergence) {
      Eigen::LLT<Matrix> llt(second / utts);
      if (llt.info() == Eigen::Success) new_t = new_t * Matrix(llt.matrixL());
    }
    if (!new_t.allFinite()) throw TrainingError("tv: T became non-finite at iteration " + std::to_string(it));
    out.model = TotalVariabilityModel(ubm, new_t);
  }
  out.objective.push_back(tv_objective(out.model, stats));
  return out;
}

}  // namespace fsv
