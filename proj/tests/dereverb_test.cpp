// tests/dereverb_test.cpp

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
#include <gtest/gtest.h>

#include "fsv/dereverb.hpp"
#include "fsv/synth.hpp"

namespace fsv {
namespace {

AudioBuffer speech(double seconds, std::uint64_t seed = 5) {
  Rng rng(seed);
  auto spk = synth::sample_speaker(rng);
  return synth::synthesize_utterance(spk, seconds, 16000, rng);
}

// Unit direct path followed by an exponentially decaying noise tail.
std::vector<double> decaying_rir(double t60, std::uint64_t seed, int rate = 16000) {
  Rng rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const auto n = static_cast<std::size_t>(t60 * rate);
  std::vector<double> h(n, 0.0);
  h[0] = 1.0;
  for (std::size_t i = 16; i < n; ++i)
    h[i] = 0.25 * nd(rng) * std::exp(-6.9 * static_cast<double>(i) / (t60 * rate));
  return h;
}

AudioBuffer reverberate(const AudioBuffer &clean, const std::vector<double> &h) {
  AudioBuffer out = clean;
  out.samples = dsp::fft_convolve(clean.samples, h);
  out.samples.resize(clean.samples.size());
  return out;
}

dsp::ComplexMatrix ar1_sequence(Index frames, dsp::Complex a) {
  dsp::ComplexMatrix y(frames, 1);
  y(0, 0) = {1.0, 0.5};
  for (Index t = 1; t < frames; ++t) y(t, 0) = a * y(t - 1, 0);
  return y;
}

TEST(Wpe, DefaultsFollowTheTenTapFilter) {
  WpeConfig cfg;
  EXPECT_EQ(cfg.taps, 10);
  EXPECT_EQ(cfg.delay, 3);
  EXPECT_EQ(cfg.iterations, 3);
  EXPECT_DOUBLE_EQ(cfg.regularization, 1e-6);
  auto p = cfg.stft_params(16000);
  EXPECT_EQ(p.win, 512);
  EXPECT_EQ(p.shift, 128);
}

double white_noise_error(double seconds) {
  Rng rng(3);
  AudioBuffer x{synth::white_noise(static_cast<std::size_t>(seconds * 16000), rng), 16000};
  for (double &v : x.samples) v *= 0.1;
  auto y = wpe_dereverberate(x, WpeConfig{});
  EXPECT_EQ(y.size(), x.size());
  double err = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) err += std::pow(y.samples[i] - x.samples[i], 2);
  return std::sqrt(err / x.size()) / rms(x.samples);
}

TEST(Wpe, WhiteNoiseIsNearlyUntouched) { EXPECT_LT(white_noise_error(30.0), 0.05); }

TEST(Wpe, WhiteNoiseErrorShrinksWithLength) {
  const double e2 = white_noise_error(2.0), e8 = white_noise_error(8.0);
  EXPECT_LT(e8, 0.75 * e2);
}

TEST(Wpe, ImprovesDirectToReverberantRatio) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto clean = speech(3.0, seed);
    auto reverb = reverberate(clean, decaying_rir(0.2, seed + 100));
    auto out = wpe_dereverberate_traced(reverb, WpeConfig{});
    const double before = projection_drr(reverb.samples, clean.samples);
    const double after = projection_drr(out.audio.samples, clean.samples);
    EXPECT_GT(after, before) << "seed " << seed;
    EXPECT_LE(mean_power(out.audio.samples), 1.1 * mean_power(reverb.samples));
    for (std::size_t i = 1; i < out.objective.size(); ++i)
      EXPECT_LE(out.objective[i], out.objective[i - 1] + 1e-6 * std::abs(out.objective[i - 1]));
  }
}

TEST(Wpe, OutputLengthMatchesInput) {
  for (std::size_t n : {16000u, 16001u, 20111u}) {
    AudioBuffer x = speech(1.5);
    x.samples.resize(n);
    EXPECT_EQ(wpe_dereverberate(x, WpeConfig{}).size(), n);
  }
}

TEST(Wpe, ZeroTapsIsIdentity) {
  auto x = speech(1.0);
  WpeConfig cfg;
  cfg.taps = 0;
  auto y = wpe_dereverberate(x, cfg);
  EXPECT_EQ(y.samples, x.samples);
}

TEST(WpeIterate, RealAr1RecoversCoefficient) {
  WpeConfig cfg;
  cfg.taps = 1;
  cfg.delay = 1;
  const double a = 0.8;
  auto y = ar1_sequence(64, a);
  dsp::ComplexMatrix unit = dsp::ComplexMatrix::Ones(64, 1);
  auto step = wpe_iterate_once(y, unit, cfg);
  ASSERT_EQ(step.filters.rows(), 1);
  ASSERT_EQ(step.filters.cols(), 1);
  EXPECT_NEAR(std::abs(step.filters(0, 0) - a), 0.0, 1e-5);
}

TEST(WpeIterate, ComplexAr1GivesConjugateFilter) {
  WpeConfig cfg;
  cfg.taps = 1;
  cfg.delay = 1;
  const dsp::Complex a = std::polar(0.9, 0.3);
  auto y = ar1_sequence(64, a);
  auto step = wpe_iterate_once(y, dsp::ComplexMatrix::Ones(64, 1), cfg);
  EXPECT_NEAR(std::abs(step.filters(0, 0) - std::conj(a)), 0.0, 1e-5);
  EXPECT_LT(step.estimate.bottomRows(63).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(WpeIterate, ObjectiveNonIncreasingOnAr1) {
  WpeConfig cfg;
  cfg.taps = 2;
  cfg.delay = 1;
  auto y = ar1_sequence(80, std::polar(0.95, 1.1));
  Rng rng(9);
  Matrix noise = randn(80, 2, rng) * 1e-3;
  for (Index t = 0; t < 80; ++t) y(t, 0) += dsp::Complex(noise(t, 0), noise(t, 1));
  const double j0 = wpe_initial_objective(y, cfg);
  auto s1 = wpe_iterate_once(y, y, cfg);
  auto s2 = wpe_iterate_once(y, s1.estimate, cfg);
  auto s3 = wpe_iterate_once(y, s2.estimate, cfg);
  EXPECT_LE(s1.objective, j0 + 1e-6 * std::abs(j0));
  EXPECT_LE(s2.objective, s1.objective + 1e-6 * std::abs(s1.objective));
  EXPECT_LE(s3.objective, s2.objective + 1e-6 * std::abs(s2.objective));
}

TEST(WpeIterate, SilentLateFramesStayFinite) {
  WpeConfig cfg;
  dsp::ComplexMatrix y = dsp::ComplexMatrix::Zero(40, 3);
  y.topRows(5).setConstant({0.3, -0.1});
  auto step = wpe_iterate_once(y, y, cfg);
  EXPECT_TRUE(step.filters.allFinite());
  EXPECT_TRUE(step.estimate.allFinite());
  dsp::ComplexMatrix silent = dsp::ComplexMatrix::Zero(40, 3);
  auto s0 = wpe_iterate_once(silent, silent, cfg);
  EXPECT_TRUE(s0.filters.allFinite());
}

TEST(WpeErrors, ShapeMismatchAndShortAudio) {
  WpeConfig cfg;
  EXPECT_THROW(wpe_iterate_once(dsp::ComplexMatrix::Ones(10, 4), dsp::ComplexMatrix::Ones(10, 3), cfg),
               DimensionError);
  AudioBuffer tiny{std::vector<double>(1000, 0.1), 16000};
  EXPECT_THROW(wpe_dereverberate(tiny, cfg), TooShortError);
  cfg.delay = 0;
  EXPECT_THROW(wpe_dereverberate(speech(1.0), cfg), ConfigError);
}

TEST(ProjectionDrr, PureReferenceIsInfiniteAndNoiseLowersIt) {
  std::vector<double> s{1.0, -2.0, 0.5, 3.0};
  std::vector<double> x{2.0, -4.0, 1.0, 6.0};
  EXPECT_GT(projection_drr(x, s), 200.0);
  std::vector<double> noisy{2.0, -4.0, 1.0, 7.0};
  const double drr = projection_drr(noisy, s);
  const double alpha = (2 + 8 + 0.5 + 21) / (1 + 4 + 0.25 + 9);
  double res = 0.0;
  for (int i = 0; i < 4; ++i) res += std::pow(noisy[i] - alpha * s[i], 2);
  EXPECT_NEAR(drr, 10 * std::log10(alpha * alpha * 14.25 / res), 1e-12);
}

}  // namespace
}  // namespace fsv
