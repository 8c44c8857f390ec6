// fsv/dsp.hpp

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

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <span>
#include <vector>

#include "fsv/audio.hpp"
#include "fsv/common.hpp"
#include "fsv/feature_matrix.hpp"

// Signal primitives shared by the feature extractors and the dereverberator.
namespace fsv::dsp {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

enum class WindowType { rectangular, hamming, hann, sqrt_hann };

/// Window coefficients. Hamming and Hann are symmetric (denominator L-1);
/// sqrt_hann is the periodic form used for perfect-reconstruction STFTs.
inline Vector window_function(WindowType type, Index length) {
  Vector w(length);
  for (Index n = 0; n < length; ++n) {
    const double sym = length > 1 ? 2.0 * kPi * n / static_cast<double>(length - 1) : 0.0;
    switch (type) {
      case WindowType::rectangular: w(n) = 1.0; break;
      case WindowType::hamming: w(n) = 0.54 - 0.46 * std::cos(sym); break;
      case WindowType::hann: w(n) = 0.5 - 0.5 * std::cos(sym); break;
      case WindowType::sqrt_hann:
        w(n) = std::sqrt(0.5 - 0.5 * std::cos(2.0 * kPi * n / static_cast<double>(length)));
        break;
    }
  }
  return w;
}

inline Index seconds_to_samples(double seconds, int sample_rate) {
  return static_cast<Index>(std::lround(seconds * sample_rate));
}

/// floor((N - L) / S) + 1, or 0 when N < L.
inline Index frame_count(Index num_samples, Index win, Index shift) {
  if (num_samples < win) return 0;
  return (num_samples - win) / shift + 1;
}

inline Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline std::vector<double> preemphasize(std::span<const double> x, double coef) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = y.size(); i-- > 1;) y[i] -= coef * x[i - 1];
  if (!y.empty()) y[0] -= coef * x[0];
  return y;
}

/// Cuts `samples` into overlapping frames (one per row), each multiplied by
/// the window. Lengths are in samples.
inline Matrix frame_and_window(std::span<const double> samples, Index win, Index shift,
                               WindowType window) {
  if (win <= 0 || shift <= 0 || win < shift)
    throw ConfigError("frame_and_window: need win >= shift > 0");
  const auto n = static_cast<Index>(samples.size());
  const Index frames = frame_count(n, win, shift);
  if (frames == 0)
    throw TooShortError("audio shorter than one analysis window (" + std::to_string(n) +
                        " < " + std::to_string(win) + " samples)");
  const Vector w = window_function(window, win);
  Matrix out(frames, win);
  for (Index t = 0; t < frames; ++t)
    for (Index i = 0; i < win; ++i) out(t, i) = samples[t * shift + i] * w(i);
  return out;
}

inline Matrix frame_and_window(const AudioBuffer &audio, double win_seconds,
                               double shift_seconds, WindowType window) {
  if (!(win_seconds >= shift_seconds && shift_seconds > 0))
    throw ConfigError("frame_and_window: need win_len >= shift > 0");
  return frame_and_window(audio.samples, seconds_to_samples(win_seconds, audio.sample_rate),
                          seconds_to_samples(shift_seconds, audio.sample_rate), window);
}

/// |DFT|^2 of each row, zero-padded to n_fft (0 selects the next power of
/// two >= frame length). Returns T x (n_fft/2 + 1).
inline Matrix power_spectrum(const Matrix &frames, Index n_fft = 0) {
  if (n_fft == 0) n_fft = next_pow2(frames.cols());
  if (n_fft < frames.cols()) throw ConfigError("power_spectrum: n_fft shorter than frame");
  if (!frames.allFinite()) throw ConfigError("power_spectrum: non-finite input");
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  const Index bins = n_fft / 2 + 1;
  Matrix out(frames.rows(), bins);
  std::vector<double> buf(n_fft, 0.0);
  std::vector<Complex> spec;
  for (Index t = 0; t < frames.rows(); ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (Index i = 0; i < frames.cols(); ++i) buf[i] = frames(t, i);
    fft.fwd(spec, buf);
    for (Index k = 0; k < bins; ++k) out(t, k) = std::norm(spec[k]);
  }
  return out;
}

// ---------------------------------------------------------------- filterbanks

enum class FilterWarp { mel, gammatone };

struct FilterbankSpec {
  int n_filters = 64;
  double f_min = 20.0;
  double f_max = 7600.0;
  FilterWarp warp = FilterWarp::mel;
  Index n_fft = 512;
  int sample_rate = 16000;
  int gammatone_order = 4;
  double gammatone_bandwidth = 1.019;  // multiple of the ERB

  void validate() const {
    require(n_filters >= 1, "filterbank: n_filters must be >= 1");
    require(sample_rate > 0, "filterbank: sample_rate must be positive");
    require(n_fft >= 2, "filterbank: n_fft must be >= 2");
    require(f_min >= 0 && f_min < f_max, "filterbank: need 0 <= f_min < f_max");
    require(f_max <= sample_rate / 2.0, "filterbank: f_max above Nyquist");
  }
};

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

/// Glasberg & Moore ERB-rate scale and bandwidth.
inline double hz_to_erb_rate(double f) { return 21.4 * std::log10(1.0 + 0.00437 * f); }
inline double erb_rate_to_hz(double e) { return (std::pow(10.0, e / 21.4) - 1.0) / 0.00437; }
inline double erb_bandwidth(double f) { return 24.7 * (0.00437 * f + 1.0); }

/// Centre frequencies: mel filters place n+2 equally spaced mel points over
/// [f_min, f_max] and use the inner n; gammatone channels are equally spaced
/// on the ERB-rate scale with both end points included.
inline std::vector<double> filterbank_center_frequencies(const FilterbankSpec &spec) {
  spec.validate();
  std::vector<double> fc(spec.n_filters);
  if (spec.warp == FilterWarp::mel) {
    const double lo = hz_to_mel(spec.f_min), hi = hz_to_mel(spec.f_max);
    const double step = (hi - lo) / (spec.n_filters + 1);
    for (int i = 0; i < spec.n_filters; ++i) fc[i] = mel_to_hz(lo + (i + 1) * step);
  } else {
    const double lo = hz_to_erb_rate(spec.f_min), hi = hz_to_erb_rate(spec.f_max);
    if (spec.n_filters == 1) {
      fc[0] = erb_rate_to_hz(0.5 * (lo + hi));
    } else {
      for (int i = 0; i < spec.n_filters; ++i)
        fc[i] = erb_rate_to_hz(lo + (hi - lo) * i / (spec.n_filters - 1));
    }
  }
  return fc;
}

/// n_filters x (n_fft/2 + 1) nonnegative weights applied to a power spectrum.
inline Matrix build_filterbank(const FilterbankSpec &spec) {
  spec.validate();
  const Index bins = spec.n_fft / 2 + 1;
  const double bin_hz = static_cast<double>(spec.sample_rate) / spec.n_fft;
  Matrix fb = Matrix::Zero(spec.n_filters, bins);
  const auto fc = filterbank_center_frequencies(spec);
  if (spec.warp == FilterWarp::mel) {
    const double lo = hz_to_mel(spec.f_min), hi = hz_to_mel(spec.f_max);
    const double step = (hi - lo) / (spec.n_filters + 1);
    for (int m = 0; m < spec.n_filters; ++m) {
      const double left = lo + m * step, centre = left + step, right = centre + step;
      for (Index k = 0; k < bins; ++k) {
        const double mel = hz_to_mel(k * bin_hz);
        if (mel > left && mel < right)
          fb(m, k) = mel <= centre ? (mel - left) / step : (right - mel) / step;
      }
    }
  } else {
    // Power response of an order-n gammatone: (1 + ((f - fc)/b)^2)^-n.
    for (int m = 0; m < spec.n_filters; ++m) {
      const double b = spec.gammatone_bandwidth * erb_bandwidth(fc[m]);
      for (Index k = 0; k < bins; ++k) {
        const double r = (k * bin_hz - fc[m]) / b;
        fb(m, k) = std::pow(1.0 + r * r, -static_cast<double>(spec.gammatone_order));
      }
    }
  }
  return fb;
}

// ------------------------------------------------------------------- cepstra

/// n_ceps x n orthonormal DCT-II basis.
inline Matrix dct_matrix(Index n, Index n_ceps) {
  if (n_ceps > n) throw ConfigError("dct: n_ceps exceeds number of filters");
  Matrix c(n_ceps, n);
  for (Index k = 0; k < n_ceps; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    for (Index j = 0; j < n; ++j)
      c(k, j) = scale * std::cos(kPi * k * (2.0 * j + 1.0) / (2.0 * n));
  }
  return c;
}

/// Row-wise orthonormal DCT-II truncated to n_ceps coefficients.
inline Matrix dct2_orthonormal(const Matrix &log_energies, Index n_ceps) {
  return log_energies * dct_matrix(log_energies.cols(), n_ceps).transpose();
}

inline Matrix safe_log(const Matrix &x, double floor = 1e-10) {
  return x.array().max(floor).log().matrix();
}

/// Regression deltas over +-window frames with edge replication.
inline Matrix compute_delta(const Matrix &x, int window) {
  if (window < 1) throw ConfigError("deltas: context window must be >= 1");
  const Index frames = x.rows();
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;
  Matrix d = Matrix::Zero(frames, x.cols());
  for (Index t = 0; t < frames; ++t) {
    for (int n = 1; n <= window; ++n) {
      const Index ahead = std::min<Index>(t + n, frames - 1);
      const Index behind = std::max<Index>(t - n, 0);
      d.row(t) += n * (x.row(ahead) - x.row(behind));
    }
  }
  return d / denom;
}

/// [static | delta | delta-delta].
inline Matrix append_deltas(const Matrix &x, int window = 2) {
  Matrix d1 = compute_delta(x, window);
  Matrix d2 = compute_delta(d1, window);
  Matrix out(x.rows(), 3 * x.cols());
  out << x, d1, d2;
  return out;
}

/// Subtracts, per dimension, the mean over a window of `window_frames`
/// frames centred on each frame. Near the edges the window is shifted to
/// stay inside the utterance; utterances no longer than the window reduce
/// to global mean subtraction.
inline Matrix sliding_cms(const Matrix &x, Index window_frames) {
  if (window_frames <= 0) throw ConfigError("sliding_cms: window must be positive");
  const Index frames = x.rows();
  if (frames == 0) return x;
  Matrix prefix = Matrix::Zero(frames + 1, x.cols());
  for (Index t = 0; t < frames; ++t) prefix.row(t + 1) = prefix.row(t) + x.row(t);
  Matrix out(frames, x.cols());
  const Index w = std::min(window_frames, frames);
  for (Index t = 0; t < frames; ++t) {
    Index start = t - window_frames / 2;
    start = std::clamp<Index>(start, 0, frames - w);
    const Index end = start + w;
    out.row(t) = x.row(t) - (prefix.row(end) - prefix.row(start)) / static_cast<double>(w);
  }
  return out;
}

inline FeatureMatrix sliding_cms(const FeatureMatrix &f, double window_seconds = 3.0) {
  if (!(window_seconds > 0)) throw ConfigError("sliding_cms: window must be positive");
  FeatureMatrix out = f;
  const auto w = static_cast<Index>(std::lround(window_seconds / f.frame_shift));
  out.frames = sliding_cms(f.frames, std::max<Index>(w, 1));
  return out;
}

// ---------------------------------------------------------------- resampling

/// Windowed-sinc (Blackman) low-pass FIR with unit DC gain; `cutoff` is a
/// fraction of the sample rate.
inline Vector design_lowpass(double cutoff, Index taps) {
  Vector h(taps);
  const double mid = (taps - 1) / 2.0;
  for (Index n = 0; n < taps; ++n) {
    const double x = n - mid;
    const double sinc = x == 0 ? 2.0 * cutoff : std::sin(2.0 * kPi * cutoff * x) / (kPi * x);
    const double w = 0.42 - 0.5 * std::cos(2.0 * kPi * n / (taps - 1)) +
                     0.08 * std::cos(4.0 * kPi * n / (taps - 1));
    h(n) = sinc * w;
  }
  return h / h.sum();
}

/// 16 kHz -> 8 kHz decimation. Only the retained output phase of the
/// anti-aliasing filter is evaluated; the signal is mirrored at both ends.
inline AudioBuffer resample_to_8k(const AudioBuffer &audio) {
  if (audio.sample_rate != 16000)
    throw ConfigError("resample_to_8k: input must be 16 kHz, got " +
                      std::to_string(audio.sample_rate));
  constexpr Index kTaps = 161;
  constexpr double kCutoff = 0.45 * 8000.0 / 16000.0;
  static const Vector h = design_lowpass(kCutoff, kTaps);
  const auto n = static_cast<Index>(audio.samples.size());
  auto at = [&](Index i) {
    if (n == 1) return audio.samples[0];
    const Index period = 2 * (n - 1);
    i = ((i % period) + period) % period;
    if (i >= n) i = period - i;
    return audio.samples[i];
  };
  AudioBuffer out;
  out.sample_rate = 8000;
  out.samples.resize((n + 1) / 2);
  const Index half = kTaps / 2;
  for (Index k = 0; k < static_cast<Index>(out.samples.size()); ++k) {
    double acc = 0.0;
    for (Index j = 0; j < kTaps; ++j) acc += h(j) * at(2 * k + half - j);
    out.samples[k] = acc;
  }
  return out;
}

// ----------------------------------------------------------------------- STFT

struct StftParams {
  Index win = 512;
  Index shift = 128;
  Index n_fft = 512;
};

/// Complex STFT (frames x bins) with sqrt-Hann analysis. The signal is
/// padded by win - shift zeros in front so every sample is covered by the
/// same number of frames.
inline ComplexMatrix stft(std::span<const double> x, const StftParams &p) {
  if (p.n_fft < p.win || p.shift <= 0 || p.shift > p.win)
    throw ConfigError("stft: inconsistent parameters");
  const auto n = static_cast<Index>(x.size());
  const Index lead = p.win - p.shift;
  const Index frames = n == 0 ? 0 : (n - 1 + lead) / p.shift + 1;
  const Vector w = window_function(WindowType::sqrt_hann, p.win);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  const Index bins = p.n_fft / 2 + 1;
  ComplexMatrix out(frames, bins);
  std::vector<double> buf(p.n_fft);
  std::vector<Complex> spec;
  for (Index t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (Index i = 0; i < p.win; ++i) {
      const Index src = t * p.shift + i - lead;
      if (src >= 0 && src < n) buf[i] = x[src] * w(i);
    }
    fft.fwd(spec, buf);
    for (Index k = 0; k < bins; ++k) out(t, k) = spec[k];
  }
  return out;
}

/// Weighted overlap-add inverse of stft(); returns exactly `length` samples.
inline std::vector<double> istft(const ComplexMatrix &spec, const StftParams &p, Index length) {
  const Index bins = p.n_fft / 2 + 1;
  if (spec.cols() != bins) throw DimensionError("istft: bin count mismatch");
  const Index lead = p.win - p.shift;
  const Index total = (spec.rows() - 1) * p.shift + p.win;
  const Vector w = window_function(WindowType::sqrt_hann, p.win);
  std::vector<double> acc(std::max<Index>(total, 0), 0.0), norm(acc.size(), 0.0);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> half(bins);
  std::vector<double> frame;
  for (Index t = 0; t < spec.rows(); ++t) {
    for (Index k = 0; k < bins; ++k) half[k] = spec(t, k);
    fft.inv(frame, half, p.n_fft);
    for (Index i = 0; i < p.win; ++i) {
      acc[t * p.shift + i] += frame[i] * w(i);
      norm[t * p.shift + i] += w(i) * w(i);
    }
  }
  std::vector<double> out(length, 0.0);
  for (Index i = 0; i < length; ++i) {
    const Index src = i + lead;
    if (src < static_cast<Index>(acc.size()) && norm[src] > 1e-12) out[i] = acc[src] / norm[src];
  }
  return out;
}

/// Full linear convolution (length N + M - 1) via FFT.
inline std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const Index out_len = static_cast<Index>(a.size() + b.size() - 1);
  const Index n = next_pow2(out_len);
  Eigen::FFT<double> fft;
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<Complex> fa, fb;
  fft.fwd(fa, pa);
  fft.fwd(fb, pb);
  for (Index k = 0; k < static_cast<Index>(fa.size()); ++k) fa[k] *= fb[k];
  std::vector<double> out;
  fft.inv(out, fa);
  out.resize(out_len);
  return out;
}

}  // namespace fsv::dsp
