// fsv/features.hpp

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
#include <vector>

#include "fsv/audio.hpp"
#include "fsv/dsp.hpp"
#include "fsv/feature_matrix.hpp"

namespace fsv {

struct FeatureConfig {
  FeatureKind kind = FeatureKind::mfcc20;
  int sample_rate = 16000;
  int n_ceps = 20;      // cepstral kinds only
  int n_filters = 20;   // mel / gammatone channels
  double f_min = 20.0;
  double f_max = 7600.0;
  double frame_length = 0.025;
  double frame_shift = 0.010;
  double preemphasis = 0.97;  // 0 disables
  bool deltas = true;
  int delta_window = 2;
  bool cms = true;
  double cms_window = 3.0;

  /// Reference configuration for each feature kind.
  static FeatureConfig preset(FeatureKind kind) {
    FeatureConfig c;
    c.kind = kind;
    c.sample_rate = feature_sample_rate(kind);
    switch (kind) {
      case FeatureKind::mfcc20: break;
      case FeatureKind::mfcc30:
        c.n_ceps = c.n_filters = 30;
        c.deltas = false;
        break;
      case FeatureKind::pncc:
        c.n_filters = 40;
        c.f_min = 200.0;
        c.f_max = 8000.0;
        break;
      case FeatureKind::mfbank16k:
      case FeatureKind::mfbank8k:
      case FeatureKind::gfbank:
        c.n_ceps = 0;
        c.n_filters = 64;
        c.preemphasis = 0.0;
        c.deltas = false;
        if (kind == FeatureKind::mfbank8k) c.f_max = 3800.0;
        if (kind == FeatureKind::gfbank) c.f_min = 50.0, c.f_max = 8000.0;
        break;
    }
    return c;
  }

  bool cepstral() const {
    return kind == FeatureKind::mfcc20 || kind == FeatureKind::mfcc30 ||
           kind == FeatureKind::pncc;
  }

  int output_dim() const {
    const int base = cepstral() ? n_ceps : n_filters;
    return deltas ? 3 * base : base;
  }

  void validate() const {
    require(sample_rate == feature_sample_rate(kind),
            std::string(to_string(kind)) + " requires " +
                std::to_string(feature_sample_rate(kind)) + " Hz input");
    require(output_dim() == feature_dim(kind),
            std::string(to_string(kind)) + " must produce " +
                std::to_string(feature_dim(kind)) + "-dim frames");
    require(!cepstral() || (n_ceps >= 1 && n_ceps <= n_filters),
            "n_ceps must be in [1, n_filters]");
    require(frame_length >= frame_shift && frame_shift > 0, "need frame_length >= shift > 0");
    require(!cms || cms_window > 0, "cms_window must be positive");
    require(delta_window >= 1, "delta_window must be >= 1");
  }

  Index n_fft() const {
    return dsp::next_pow2(dsp::seconds_to_samples(frame_length, sample_rate));
  }

  dsp::FilterbankSpec filterbank(dsp::FilterWarp warp) const {
    dsp::FilterbankSpec s;
    s.n_filters = n_filters;
    s.f_min = f_min;
    s.f_max = f_max;
    s.warp = warp;
    s.n_fft = n_fft();
    s.sample_rate = sample_rate;
    return s;
  }
};

/// PNCC stage constants and switches. The switches exist so the pipeline
/// can be degenerated to a plain gammatone-log cepstrum for testing.
struct PnccOptions {
  int medium_time_context = 2;  // M: average over 2M+1 frames
  double lambda_a = 0.999;
  double lambda_b = 0.5;
  double lambda_t = 0.85;
  double mu_t = 0.2;
  double excitation_threshold = 2.0;
  int weight_smoothing = 4;  // channels on each side
  double lambda_mu = 0.999;
  double exponent = 1.0 / 15.0;
  bool noise_suppression = true;  // asymmetric filtering, masking, weighting
  bool log_nonlinearity = false;  // log instead of power law, skips normalisation
};

namespace detail {

inline constexpr double kLogFloor = 1e-10;
// PNCC works on linear power; its floor only guards divisions.
inline constexpr double kPowerFloor = 1e-30;

inline void check_rate(const AudioBuffer &audio, const FeatureConfig &cfg) {
  cfg.validate();
  if (audio.sample_rate != cfg.sample_rate)
    throw ConfigError(std::string(to_string(cfg.kind)) + ": expected " +
                      std::to_string(cfg.sample_rate) + " Hz audio, got " +
                      std::to_string(audio.sample_rate));
}

inline Matrix power_frames(const AudioBuffer &audio, const FeatureConfig &cfg) {
  std::vector<double> x = cfg.preemphasis > 0 ? dsp::preemphasize(audio.samples, cfg.preemphasis)
                                              : audio.samples;
  Matrix frames = dsp::frame_and_window(
      x, dsp::seconds_to_samples(cfg.frame_length, cfg.sample_rate),
      dsp::seconds_to_samples(cfg.frame_shift, cfg.sample_rate), dsp::WindowType::hamming);
  return dsp::power_spectrum(frames, cfg.n_fft());
}

inline FeatureMatrix finish(Matrix static_part, const FeatureConfig &cfg) {
  FeatureMatrix f;
  f.kind = cfg.kind;
  f.frame_shift = cfg.frame_shift;
  f.frames = cfg.deltas ? dsp::append_deltas(static_part, cfg.delta_window)
                        : std::move(static_part);
  if (cfg.cms) f = dsp::sliding_cms(f, cfg.cms_window);
  return f;
}

// First-order recursive tracker that rises slowly (lambda_a) and falls
// quickly (lambda_b), applied along time for each channel.
inline Matrix asymmetric_filter(const Matrix &x, double lambda_a, double lambda_b) {
  Matrix y(x.rows(), x.cols());
  for (Index l = 0; l < x.cols(); ++l) {
    double prev = 0.9 * x(0, l);
    y(0, l) = prev;
    for (Index m = 1; m < x.rows(); ++m) {
      const double v = x(m, l);
      prev = v >= prev ? lambda_a * prev + (1 - lambda_a) * v
                       : lambda_b * prev + (1 - lambda_b) * v;
      y(m, l) = prev;
    }
  }
  return y;
}

}  // namespace detail

inline FeatureMatrix extract_mfcc(const AudioBuffer &audio, const FeatureConfig &cfg) {
  if (cfg.kind != FeatureKind::mfcc20 && cfg.kind != FeatureKind::mfcc30)
    throw ConfigError("extract_mfcc: kind must be mfcc20 or mfcc30");
  detail::check_rate(audio, cfg);
  const Matrix fb = dsp::build_filterbank(cfg.filterbank(dsp::FilterWarp::mel));
  Matrix energies = detail::power_frames(audio, cfg) * fb.transpose();
  return detail::finish(dsp::dct2_orthonormal(dsp::safe_log(energies), cfg.n_ceps), cfg);
}

inline FeatureMatrix extract_logmel(const AudioBuffer &audio, const FeatureConfig &cfg) {
  if (cfg.kind != FeatureKind::mfbank8k && cfg.kind != FeatureKind::mfbank16k)
    throw ConfigError("extract_logmel: kind must be mfbank8k or mfbank16k");
  detail::check_rate(audio, cfg);
  const Matrix fb = dsp::build_filterbank(cfg.filterbank(dsp::FilterWarp::mel));
  return detail::finish(dsp::safe_log(detail::power_frames(audio, cfg) * fb.transpose()), cfg);
}

inline FeatureMatrix extract_gfbank(const AudioBuffer &audio, const FeatureConfig &cfg) {
  if (cfg.kind != FeatureKind::gfbank) throw ConfigError("extract_gfbank: kind must be gfbank");
  detail::check_rate(audio, cfg);
  const Matrix fb = dsp::build_filterbank(cfg.filterbank(dsp::FilterWarp::gammatone));
  return detail::finish(dsp::safe_log(detail::power_frames(audio, cfg) * fb.transpose()), cfg);
}

/// Gammatone channel powers (frames x channels) on the PNCC front end.
inline Matrix pncc_channel_power(const AudioBuffer &audio, const FeatureConfig &cfg) {
  detail::check_rate(audio, cfg);
  const Matrix fb = dsp::build_filterbank(cfg.filterbank(dsp::FilterWarp::gammatone));
  return detail::power_frames(audio, cfg) * fb.transpose();
}

/// Log gammatone cepstra on the same front end as PNCC: the reference path
/// that PNCC degenerates to when its robust stages are switched off.
inline FeatureMatrix extract_gammatone_cepstra(const AudioBuffer &audio, const FeatureConfig &cfg) {
  Matrix p = pncc_channel_power(audio, cfg);
  return detail::finish(dsp::dct2_orthonormal(dsp::safe_log(p, detail::kLogFloor), cfg.n_ceps),
                        cfg);
}

/// Power-normalized cepstral coefficients.
inline FeatureMatrix extract_pncc(const AudioBuffer &audio, const FeatureConfig &cfg,
                                  const PnccOptions &opt = {}) {
  if (cfg.kind != FeatureKind::pncc) throw ConfigError("extract_pncc: kind must be pncc");
  const Matrix p = pncc_channel_power(audio, cfg);
  const Index frames = p.rows(), chans = p.cols();
  Matrix t = p;

  if (opt.noise_suppression) {
    const Matrix pf = p.array().max(detail::kPowerFloor).matrix();
    // medium-time power
    Matrix q(frames, chans);
    for (Index m = 0; m < frames; ++m) {
      const Index lo = std::max<Index>(0, m - opt.medium_time_context);
      const Index hi = std::min<Index>(frames - 1, m + opt.medium_time_context);
      q.row(m) = pf.middleRows(lo, hi - lo + 1).colwise().mean();
    }
    // asymmetric noise floor removal with half-wave rectification
    const Matrix q_le = detail::asymmetric_filter(q, opt.lambda_a, opt.lambda_b);
    const Matrix q0 = (q - q_le).cwiseMax(0.0);
    const Matrix q_floor = detail::asymmetric_filter(q0, opt.lambda_a, opt.lambda_b);
    // temporal masking
    Matrix r_sp(frames, chans);
    for (Index l = 0; l < chans; ++l) {
      double peak = q0(0, l);
      r_sp(0, l) = q0(0, l);
      for (Index m = 1; m < frames; ++m) {
        const double decayed = opt.lambda_t * peak;
        r_sp(m, l) = q0(m, l) >= decayed ? q0(m, l) : opt.mu_t * peak;
        peak = std::max(decayed, q0(m, l));
      }
    }
    // excitation segments keep the masked power, the rest the floor level
    Matrix ratio(frames, chans);
    for (Index m = 0; m < frames; ++m)
      for (Index l = 0; l < chans; ++l) {
        const double r = q(m, l) >= opt.excitation_threshold * q_le(m, l) ? r_sp(m, l)
                                                                            : q_floor(m, l);
        ratio(m, l) = r / q(m, l);
      }
    // spectral weight smoothing across channels
    for (Index m = 0; m < frames; ++m)
      for (Index l = 0; l < chans; ++l) {
        const Index lo = std::max<Index>(0, l - opt.weight_smoothing);
        const Index hi = std::min<Index>(chans - 1, l + opt.weight_smoothing);
        t(m, l) = pf(m, l) * ratio.row(m).segment(lo, hi - lo + 1).mean();
      }
  }

  Matrix v(frames, chans);
  if (opt.log_nonlinearity) {
    v = dsp::safe_log(t, detail::kLogFloor);
  } else {
    // running mean power normalisation followed by the power law
    double mu = std::max(t.row(0).mean(), detail::kPowerFloor);
    for (Index m = 0; m < frames; ++m) {
      mu = opt.lambda_mu * mu + (1 - opt.lambda_mu) * t.row(m).mean();
      const double denom = std::max(mu, detail::kPowerFloor);
      for (Index l = 0; l < chans; ++l)
        v(m, l) = std::pow(std::max(t(m, l), 0.0) / denom, opt.exponent);
    }
  }
  return detail::finish(dsp::dct2_orthonormal(v, cfg.n_ceps), cfg);
}

/// Dispatches on cfg.kind.
inline FeatureMatrix extract_features(const AudioBuffer &audio, const FeatureConfig &cfg) {
  switch (cfg.kind) {
    case FeatureKind::mfcc20:
    case FeatureKind::mfcc30: return extract_mfcc(audio, cfg);
    case FeatureKind::pncc: return extract_pncc(audio, cfg);
    case FeatureKind::mfbank8k:
    case FeatureKind::mfbank16k: return extract_logmel(audio, cfg);
    case FeatureKind::gfbank: return extract_gfbank(audio, cfg);
  }
  throw ConfigError("unknown feature kind");
}

}  // namespace fsv
