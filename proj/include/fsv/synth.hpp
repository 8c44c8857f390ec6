// fsv/synth.hpp

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

#include <array>
#include <vector>

#include "fsv/audio.hpp"
#include "fsv/common.hpp"

// Synthetic stand-ins for speech and noise corpora: a source-filter vowel
// synthesiser with per-speaker vocal-tract traits, and coloured noise.
namespace fsv::synth {

/// Gaussian white noise with unit variance.
inline std::vector<double> white_noise(std::size_t n, Rng &rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> x(n);
  for (auto &v : x) v = nd(rng);
  return x;
}

enum class NoiseColor { white, pink, brown };

/// Unit-variance coloured noise. Pink uses Kellet's 1/f filter bank, brown
/// is leaky-integrated white noise.
inline std::vector<double> colored_noise(std::size_t n, NoiseColor color, Rng &rng) {
  std::vector<double> w = white_noise(n, rng);
  if (color == NoiseColor::pink) {
    std::array<double, 7> b{};
    for (auto &v : w) {
      const double white = v;
      b[0] = 0.99886 * b[0] + white * 0.0555179;
      b[1] = 0.99332 * b[1] + white * 0.0750759;
      b[2] = 0.96900 * b[2] + white * 0.1538520;
      b[3] = 0.86650 * b[3] + white * 0.3104856;
      b[4] = 0.55000 * b[4] + white * 0.5329522;
      b[5] = -0.7616 * b[5] - white * 0.0168980;
      v = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + white * 0.5362;
      b[6] = white * 0.115926;
    }
  } else if (color == NoiseColor::brown) {
    double acc = 0.0;
    for (auto &v : w) v = acc = 0.98 * acc + v;
  }
  const double r = rms(w);
  if (r > 0)
    for (auto &v : w) v /= r;
  return w;
}

/// Speaker-level traits of the vowel synthesiser.
struct SpeakerTraits {
  double f0 = 120.0;            // mean pitch, Hz
  double formant_scale = 1.0;   // vocal-tract length factor
  double tilt = 0.9;            // glottal one-pole coefficient
  std::array<double, 6> vowel_offset{1, 1, 1, 1, 1, 1};  // per-vowel F2 tweak
  double f4 = 3500.0;
  double bandwidth_scale = 1.0;
};

inline SpeakerTraits sample_speaker(Rng &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SpeakerTraits s;
  s.f0 = 90.0 + 150.0 * u(rng);
  s.formant_scale = 0.82 + 0.40 * u(rng);
  s.tilt = 0.80 + 0.17 * u(rng);
  for (auto &o : s.vowel_offset) o = 0.88 + 0.24 * u(rng);
  s.f4 = (3200.0 + 900.0 * u(rng)) * s.formant_scale;
  s.bandwidth_scale = 0.7 + 0.8 * u(rng);
  return s;
}

namespace detail {

// F1, F2, F3 of six reference vowels.
inline constexpr std::array<std::array<double, 3>, 6> kVowels = {{
    {730, 1090, 2440},
    {270, 2290, 3010},
    {300, 870, 2240},
    {530, 1840, 2480},
    {570, 840, 2410},
    {660, 1720, 2410},
}};

struct Resonator {
  double a1 = 0, a2 = 0, gain = 1, y1 = 0, y2 = 0;
  void set(double freq, double bw, int rate) {
    const double r = std::exp(-kPi * bw / rate);
    a1 = 2 * r * std::cos(2 * kPi * freq / rate);
    a2 = -r * r;
    gain = 1 - a1 - a2;  // unity at DC
  }
  double step(double x) {
    const double y = gain * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace detail

/// Vowel-like utterance of `seconds` length: voiced syllables with pitch
/// drift and raised-cosine envelopes, separated by short pauses or
/// fricative noise. Normalised to an RMS of 0.1.
inline AudioBuffer synthesize_utterance(const SpeakerTraits &spk, double seconds, int rate,
                                        Rng &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  const auto total = static_cast<std::size_t>(seconds * rate);
  AudioBuffer out;
  out.sample_rate = rate;
  out.samples.reserve(total);
  std::array<detail::Resonator, 4> tract;
  double glottal = 0.0, phase = 0.0, lip = 0.0, period_jitter = 1.0;
  std::vector<double> fric(total, 0.0);
  double voiced_power = 0.0, fric_power = 0.0;
  while (out.samples.size() < total) {
    const auto vowel = static_cast<std::size_t>(u(rng) * detail::kVowels.size()) % 6;
    const auto &fv = detail::kVowels[vowel];
    const double jitter = 1.0 + 0.03 * nd(rng);
    const std::array<double, 4> formants = {
        fv[0] * spk.formant_scale * jitter,
        fv[1] * spk.formant_scale * spk.vowel_offset[vowel] * jitter,
        fv[2] * spk.formant_scale * jitter, spk.f4};
    const std::array<double, 4> bws = {60, 90, 120, 170};
    for (std::size_t i = 0; i < 4; ++i)
      tract[i].set(std::min(formants[i], 0.45 * rate), bws[i] * spk.bandwidth_scale, rate);
    const auto seg = static_cast<std::size_t>((0.12 + 0.18 * u(rng)) * rate);
    const double f_start = spk.f0 * (1.0 + 0.08 * nd(rng));
    const double f_end = f_start * (0.85 + 0.2 * u(rng));
    for (std::size_t n = 0; n < seg && out.samples.size() < total; ++n) {
      const double pos = static_cast<double>(n) / seg;
      const double f0 = f_start + (f_end - f_start) * pos;
      phase += f0 * period_jitter / rate;
      double excitation = 0.0;
      if (phase >= 1.0) {
        phase -= 1.0;
        excitation = 1.0;
        period_jitter = 1.0 + 0.02 * nd(rng);
      }
      excitation += 0.02 * nd(rng);
      glottal = spk.tilt * glottal + excitation;
      double y = glottal;
      for (auto &r : tract) y = r.step(y);
      const double radiated = y - lip;  // lip radiation
      lip = y;
      y = radiated;
      const double env = 0.5 - 0.5 * std::cos(2.0 * kPi * pos);
      voiced_power += env * y * env * y;
      out.samples.push_back(env * y);
    }
    // gap: silence or a short fricative burst
    const auto gap = static_cast<std::size_t>((0.03 + 0.12 * u(rng)) * rate);
    const bool fricative = u(rng) < 0.4;
    double prev = 0.0;
    for (std::size_t n = 0; n < gap && out.samples.size() < total; ++n) {
      if (fricative) {
        const double w = nd(rng);
        fric[out.samples.size()] = w - prev;
        fric_power += (w - prev) * (w - prev);
        prev = w;
      }
      out.samples.push_back(0.0);
    }
  }
  // fricatives sit about 12 dB under the voiced level
  const double k = fric_power > 0 ? 0.25 * std::sqrt(voiced_power / fric_power) : 0.0;
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] += k * fric[i] + 1e-4 * nd(rng);
  const double r = rms(out.samples);
  if (r > 0)
    for (auto &v : out.samples) v *= 0.1 / r;
  return out;
}

inline AudioBuffer sine_wave(double freq, double seconds, int rate, double amplitude = 0.5) {
  AudioBuffer a;
  a.sample_rate = rate;
  a.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    a.samples[i] = amplitude * std::sin(2.0 * kPi * freq * static_cast<double>(i) / rate);
  return a;
}

}  // namespace fsv::synth
