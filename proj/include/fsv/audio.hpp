// fsv/audio.hpp

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
#include <fstream>
#include <string>
#include <vector>

#include "fsv/binary_io.hpp"
#include "fsv/common.hpp"

namespace fsv {

/// Mono audio with samples nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  Eigen::Map<const Vector> view() const {
    return {samples.data(), static_cast<Index>(samples.size())};
  }

  void validate() const {
    if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
    for (double s : samples)
      if (!std::isfinite(s)) throw ConfigError("audio contains non-finite samples");
  }
};

inline double mean_power(const std::vector<double> &x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

inline double rms(const std::vector<double> &x) { return std::sqrt(mean_power(x)); }


/// Reads 16-bit signed PCM mono RIFF/WAVE.
inline AudioBuffer read_wav(std::istream &is) {
  using io::get_le;
  if (io::get_tag(is) != "RIFF") throw FormatError("not a RIFF file");
  get_le<std::uint32_t>(is);
  if (io::get_tag(is) != "WAVE") throw FormatError("not a WAVE file");
  AudioBuffer out;
  bool have_fmt = false;
  while (is) {
    std::string tag = io::get_tag(is);
    auto len = get_le<std::uint32_t>(is);
    if (tag == "fmt ") {
      auto format = get_le<std::uint16_t>(is);
      auto channels = get_le<std::uint16_t>(is);
      out.sample_rate = static_cast<int>(get_le<std::uint32_t>(is));
      get_le<std::uint32_t>(is);
      get_le<std::uint16_t>(is);
      auto bits = get_le<std::uint16_t>(is);
      if (format != 1 || channels != 1 || bits != 16)
        throw FormatError("only 16-bit PCM mono WAV is supported");
      is.ignore(len - 16);
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk");
      out.samples.resize(len / 2);
      for (auto &s : out.samples) s = get_le<std::int16_t>(is) / 32768.0;
      return out;
    } else {
      is.ignore(len + (len & 1));
    }
  }
  throw FormatError("no data chunk");
}

inline AudioBuffer read_wav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return read_wav(is);
}

/// Writes 16-bit PCM mono; samples are clipped to [-1, 1).
inline void write_wav(std::ostream &os, const AudioBuffer &audio) {
  using io::put_le;
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  os.write("RIFF", 4);
  put_le<std::uint32_t>(os, 36 + 2 * n);
  os.write("WAVEfmt ", 8);
  put_le<std::uint32_t>(os, 16);
  put_le<std::uint16_t>(os, 1);
  put_le<std::uint16_t>(os, 1);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(audio.sample_rate));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_le<std::uint16_t>(os, 2);
  put_le<std::uint16_t>(os, 16);
  os.write("data", 4);
  put_le<std::uint32_t>(os, 2 * n);
  for (double s : audio.samples) {
    double v = std::clamp(s, -1.0, 32767.0 / 32768.0);
    put_le<std::int16_t>(os, static_cast<std::int16_t>(std::lround(v * 32768.0)));
  }
}

inline void write_wav(const std::string &path, const AudioBuffer &audio) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path);
  write_wav(os, audio);
}

}  // namespace fsv
