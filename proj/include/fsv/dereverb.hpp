// fsv/dereverb.hpp

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

#include <span>
#include <vector>

#include "fsv/audio.hpp"
#include "fsv/dsp.hpp"

namespace fsv {

struct WpeConfig {
  int taps = 10;
  int delay = 3;  // STFT frames
  int iterations = 3;
  double regularization = 1e-6;  // ridge, relative to the mean observed power
  double variance_floor = 1e-10;
  double win_seconds = 0.032;
  double shift_seconds = 0.008;

  void validate() const {
    require(taps >= 0, "wpe: taps must be >= 0");
    require(delay >= 1, "wpe: delay must be >= 1");
    require(iterations >= 1, "wpe: iterations must be >= 1");
    require(regularization > 0, "wpe: regularization must be positive");
    require(variance_floor > 0, "wpe: variance floor must be positive");
    require(win_seconds >= shift_seconds && shift_seconds > 0, "wpe: bad STFT window/shift");
  }

  dsp::StftParams stft_params(int sample_rate) const {
    dsp::StftParams p;
    p.win = dsp::seconds_to_samples(win_seconds, sample_rate);
    p.shift = dsp::seconds_to_samples(shift_seconds, sample_rate);
    p.n_fft = dsp::next_pow2(p.win);
    return p;
  }
};

/// One variance/filter update over every frequency bin.
struct WpeIteration {
  dsp::ComplexMatrix filters;   // bins x taps
  dsp::ComplexMatrix estimate;  // frames x bins
  /// sum_t |d_t|^2 / lambda_t + log lambda_t + eps |g|^2, with lambda
  /// re-estimated from the new estimate. Non-increasing over iterations.
  double objective = 0.0;
};

namespace detail {

inline double wpe_epsilon(const dsp::ComplexMatrix &obs, const WpeConfig &cfg) {
  const double mean_power = obs.size() ? obs.cwiseAbs2().mean() : 0.0;
  return cfg.regularization * std::max(mean_power, 1e-20);
}

// Delayed tap-stacked observation: row t = [y_{t-D}, ..., y_{t-D-K+1}].
inline Eigen::MatrixXcd stack_taps(const Eigen::VectorXcd &y, int delay, int taps) {
  const Index frames = y.size();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(frames, taps);
  for (int k = 0; k < taps; ++k)
    for (Index t = delay + k; t < frames; ++t) a(t, k) = y(t - delay - k);
  return a;
}

inline double profile_objective(const Eigen::VectorXcd &d, double floor) {
  double acc = 0.0;
  for (Index t = 0; t < d.size(); ++t) {
    const double p = std::norm(d(t));
    const double lambda = std::max(p, floor);
    acc += p / lambda + std::log(lambda);
  }
  return acc;
}

}  // namespace detail

/// Objective of `estimate` with zero filters (the starting point).
inline double wpe_initial_objective(const dsp::ComplexMatrix &estimate, const WpeConfig &cfg) {
  double acc = 0.0;
  for (Index f = 0; f < estimate.cols(); ++f)
    acc += detail::profile_objective(estimate.col(f), cfg.variance_floor);
  return acc;
}

/// Variance estimate from `current`, then per-bin weighted least squares
/// for the delayed prediction filter and the new dereverberated estimate.
inline WpeIteration wpe_iterate_once(const dsp::ComplexMatrix &obs,
                                     const dsp::ComplexMatrix &current, const WpeConfig &cfg) {
  cfg.validate();
  if (obs.rows() != current.rows() || obs.cols() != current.cols())
    throw DimensionError("wpe_iterate_once: observation and estimate shapes differ");
  const Index bins = obs.cols();
  const int taps = cfg.taps;
  const double eps = detail::wpe_epsilon(obs, cfg);
  WpeIteration out;
  out.filters = dsp::ComplexMatrix::Zero(bins, taps);
  out.estimate = obs;
  for (Index f = 0; f < bins; ++f) {
    const Eigen::VectorXcd y = obs.col(f);
    if (taps == 0) {
      out.objective += detail::profile_objective(y, cfg.variance_floor);
      continue;
    }
    const Vector inv_lambda =
        current.col(f).cwiseAbs2().cwiseMax(cfg.variance_floor).cwiseInverse();
    const Eigen::MatrixXcd a = detail::stack_taps(y, cfg.delay, taps);
    Eigen::MatrixXcd r = a.transpose() * inv_lambda.asDiagonal() * a.conjugate();
    r.diagonal().array() += eps;
    const Eigen::VectorXcd rhs = a.transpose() * inv_lambda.cwiseProduct(y.conjugate());
    const Eigen::VectorXcd g = r.ldlt().solve(rhs);
    const Eigen::VectorXcd d = y - a * g.conjugate();
    out.filters.row(f) = g.transpose();
    out.estimate.col(f) = d;
    out.objective += detail::profile_objective(d, cfg.variance_floor) + eps * g.squaredNorm();
  }
  return out;
}

struct WpeOutput {
  AudioBuffer audio;
  std::vector<double> objective;  // starting point, then after each iteration
};

/// Single-channel WPE dereverberation. taps == 0 is the identity.
inline WpeOutput wpe_dereverberate_traced(const AudioBuffer &audio, const WpeConfig &cfg) {
  cfg.validate();
  audio.validate();
  WpeOutput out;
  if (cfg.taps == 0) {
    out.audio = audio;
    return out;
  }
  const dsp::StftParams p = cfg.stft_params(audio.sample_rate);
  const auto n = static_cast<Index>(audio.samples.size());
  const Index frames = n == 0 ? 0 : (n - 1 + p.win - p.shift) / p.shift + 1;
  if (frames < cfg.taps + cfg.delay + 2)
    throw TooShortError("wpe: audio too short (" + std::to_string(frames) +
                        " STFT frames, need " + std::to_string(cfg.taps + cfg.delay + 2) + ")");
  const dsp::ComplexMatrix obs = dsp::stft(audio.samples, p);
  dsp::ComplexMatrix est = obs;
  out.objective.push_back(wpe_initial_objective(obs, cfg));
  for (int it = 0; it < cfg.iterations; ++it) {
    WpeIteration step = wpe_iterate_once(obs, est, cfg);
    est = std::move(step.estimate);
    out.objective.push_back(step.objective);
  }
  out.audio.sample_rate = audio.sample_rate;
  out.audio.samples = dsp::istft(est, p, n);
  return out;
}

inline AudioBuffer wpe_dereverberate(const AudioBuffer &audio, const WpeConfig &cfg) {
  return wpe_dereverberate_traced(audio, cfg).audio;
}

/// Direct-to-residual energy ratio (dB) of `signal` after least-squares
/// projection onto the known direct-path `reference`.
inline double projection_drr(std::span<const double> signal, std::span<const double> reference) {
  require_dims(signal.size() == reference.size(), "projection_drr: length mismatch");
  double xs = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    xs += signal[i] * reference[i];
    ss += reference[i] * reference[i];
  }
  if (ss <= 0) throw DegenerateError("projection_drr: silent reference");
  const double alpha = xs / ss;
  double residual = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i)
    residual += std::pow(signal[i] - alpha * reference[i], 2);
  return 10.0 * std::log10(alpha * alpha * ss / std::max(residual, 1e-300));
}

}  // namespace fsv
