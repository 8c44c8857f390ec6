// fsv/augment.hpp

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
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsv/audio.hpp"
#include "fsv/dsp.hpp"

namespace fsv {

using Point3 = std::array<double, 3>;

/// Shoebox room. Wall order in `absorption`: x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
struct RoomSpec {
  Point3 dimensions{6.0, 5.0, 3.0};
  std::array<double, 6> absorption{0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  Point3 source{2.0, 3.5, 1.6};
  Point3 mic{4.5, 1.5, 1.2};
  int max_order = 10;
  int sample_rate = 16000;
  double c = 343.0;
  Index length = 0;  // samples; 0 = up to the last arrival

  void set_absorption(double a) { absorption.fill(a); }

  void validate() const {
    require(sample_rate > 0, "room: sample_rate must be positive");
    require(c > 0, "room: speed of sound must be positive");
    require(max_order >= 0, "room: max_order must be >= 0");
    require(length >= 0, "room: length must be >= 0");
    for (double a : absorption)
      require(a > 0.0 && a <= 1.0, "room: absorption must lie in (0, 1]");
    for (int i = 0; i < 3; ++i) {
      require(dimensions[i] > 0, "room: dimensions must be positive");
      require(source[i] > 0 && source[i] < dimensions[i], "room: source outside the room");
      require(mic[i] > 0 && mic[i] < dimensions[i], "room: mic outside the room");
    }
  }

  double volume() const { return dimensions[0] * dimensions[1] * dimensions[2]; }
  double surface() const {
    const auto &d = dimensions;
    return 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]);
  }
};

/// Uniform absorption giving a Sabine reverberation time of `t60` seconds.
inline double absorption_for_t60(const RoomSpec &room, double t60) {
  require(t60 > 0, "t60 must be positive");
  const double a = 0.161 * room.volume() / (room.surface() * t60);
  if (a > 1.0) throw ConfigError("t60 too short for this room");
  return a;
}

inline void to_json(nlohmann::json &j, const RoomSpec &r) {
  j = nlohmann::json{{"dimensions", r.dimensions}, {"absorption", r.absorption},
                     {"source", r.source},         {"mic", r.mic},
                     {"max_order", r.max_order},   {"sample_rate", r.sample_rate},
                     {"c", r.c},                   {"length", r.length}};
}

/// Accepts a scalar or six-element `absorption`, or `t60` instead.
inline void from_json(const nlohmann::json &j, RoomSpec &r) {
  try {
    r = RoomSpec{};
    if (j.contains("dimensions")) j.at("dimensions").get_to(r.dimensions);
    if (j.contains("source")) j.at("source").get_to(r.source);
    if (j.contains("mic")) j.at("mic").get_to(r.mic);
    if (j.contains("max_order")) j.at("max_order").get_to(r.max_order);
    if (j.contains("sample_rate")) j.at("sample_rate").get_to(r.sample_rate);
    if (j.contains("c")) j.at("c").get_to(r.c);
    if (j.contains("length")) j.at("length").get_to(r.length);
    if (j.contains("absorption")) {
      const auto &a = j.at("absorption");
      if (a.is_number()) r.set_absorption(a.get<double>());
      else a.get_to(r.absorption);
    } else if (j.contains("t60")) {
      r.set_absorption(absorption_for_t60(r, j.at("t60").get<double>()));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("room spec: ") + e.what());
  }
}

inline RoomSpec read_room_spec(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j.get<RoomSpec>();
}

struct ImageSource {
  Point3 position;
  int order = 0;
  double gain = 1.0;  // product of wall reflection coefficients
  double distance = 0.0;
};

/// Mirror images up to `max_order` reflections.
inline std::vector<ImageSource> image_sources(const RoomSpec &room) {
  room.validate();
  std::array<double, 6> beta;
  for (int w = 0; w < 6; ++w) beta[w] = std::sqrt(1.0 - room.absorption[w]);
  const int n_max = room.max_order;
  std::vector<ImageSource> out;
  for (int nx = -n_max; nx <= n_max; ++nx)
    for (int ny = -n_max; ny <= n_max; ++ny)
      for (int nz = -n_max; nz <= n_max; ++nz)
        for (int q = 0; q < 8; ++q) {
          const std::array<int, 3> n{nx, ny, nz};
          const std::array<int, 3> qq{q & 1, (q >> 1) & 1, (q >> 2) & 1};
          ImageSource img;
          for (int a = 0; a < 3; ++a) {
            const int lo = std::abs(n[a] - qq[a]), hi = std::abs(n[a]);
            img.order += lo + hi;
            img.gain *= std::pow(beta[2 * a], lo) * std::pow(beta[2 * a + 1], hi);
            img.position[a] = (1 - 2 * qq[a]) * room.source[a] + 2.0 * n[a] * room.dimensions[a];
          }
          if (img.order > n_max) continue;
          double d2 = 0.0;
          for (int a = 0; a < 3; ++a) d2 += std::pow(img.position[a] - room.mic[a], 2);
          img.distance = std::sqrt(d2);
          out.push_back(img);
        }
  return out;
}

namespace detail {
inline constexpr int kFracDelayHalf = 40;  // 81-tap filter
}

/// Image-source room impulse response with windowed-sinc fractional delays.
inline AudioBuffer ism_rir(const RoomSpec &room) {
  room.validate();
  double d0 = 0.0;
  for (int a = 0; a < 3; ++a) d0 += std::pow(room.source[a] - room.mic[a], 2);
  if (d0 < 1e-12) throw ConfigError("ism_rir: source and mic coincide");
  const auto images = image_sources(room);
  const double fs = room.sample_rate;
  const int half = detail::kFracDelayHalf;
  double max_delay = 0.0;
  for (const auto &img : images)
    if (img.gain > 0) max_delay = std::max(max_delay, img.distance / room.c * fs);
  const Index len = room.length > 0 ? room.length
                                    : static_cast<Index>(std::ceil(max_delay)) + half + 1;
  AudioBuffer rir;
  rir.sample_rate = room.sample_rate;
  rir.samples.assign(len, 0.0);
  for (const auto &img : images) {
    if (img.gain <= 0) continue;
    const double amp = img.gain / (4.0 * kPi * img.distance);
    const double tau = img.distance / room.c * fs;
    const auto centre = static_cast<Index>(std::llround(tau));
    for (Index k = centre - half; k <= centre + half; ++k) {
      if (k < 0 || k >= len) continue;
      const double x = static_cast<double>(k) - tau;
      if (std::abs(x) >= half + 0.5) continue;
      const double window = 0.5 * (1.0 + std::cos(kPi * x / (half + 0.5)));
      const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      rir.samples[k] += amp * window * sinc;
    }
  }
  return rir;
}

/// Full linear convolution (length n + m - 1).
inline AudioBuffer convolve_rir(const AudioBuffer &audio, const AudioBuffer &rir) {
  if (audio.sample_rate != rir.sample_rate)
    throw ConfigError("convolve_rir: sample rates differ (" + std::to_string(audio.sample_rate) +
                      " vs " + std::to_string(rir.sample_rate) + ")");
  AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  out.samples = dsp::fft_convolve(audio.samples, rir.samples);
  return out;
}

struct MixComponents {
  AudioBuffer speech;
  AudioBuffer noise;  // scaled, same length as speech

  AudioBuffer sum() const {
    AudioBuffer out = speech;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += noise.samples[i];
    return out;
  }
};

/// Scales `noise` so that speech-to-noise power is `snr_db`. Shorter noise is
/// tiled from a random offset drawn with `seed`.
inline MixComponents mix_components(const AudioBuffer &speech, const AudioBuffer &noise,
                                    double snr_db, std::uint64_t seed = 0) {
  if (speech.sample_rate != noise.sample_rate)
    throw ConfigError("mix_at_snr: sample rates differ");
  require(std::isfinite(snr_db), "mix_at_snr: snr must be finite");
  const double ps = mean_power(speech.samples);
  if (speech.samples.empty() || ps <= 0) throw DegenerateError("mix_at_snr: silent speech");
  if (noise.samples.empty()) throw DegenerateError("mix_at_snr: empty noise");
  const std::size_t n = speech.samples.size(), m = noise.samples.size();
  std::size_t offset = 0;
  if (m < n) {
    Rng rng(seed);
    offset = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
  }
  MixComponents out;
  out.speech = speech;
  out.noise.sample_rate = speech.sample_rate;
  out.noise.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.noise.samples[i] = noise.samples[(offset + i) % m];
  const double pn = mean_power(out.noise.samples);
  if (pn <= 0) throw DegenerateError("mix_at_snr: silent noise");
  const double scale = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  for (double &v : out.noise.samples) v *= scale;
  return out;
}

inline AudioBuffer mix_at_snr(const AudioBuffer &speech, const AudioBuffer &noise, double snr_db,
                              std::uint64_t seed = 0) {
  return mix_components(speech, noise, snr_db, seed).sum();
}

}  // namespace fsv
