// fsv/feature_matrix.hpp

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
#include <optional>
#include <string>
#include <string_view>

#include "fsv/binary_io.hpp"
#include "fsv/common.hpp"

namespace fsv {

enum class FeatureKind : std::uint8_t {
  mfcc20 = 0,
  mfcc30 = 1,
  pncc = 2,
  mfbank8k = 3,
  mfbank16k = 4,
  gfbank = 5,
};

inline constexpr std::array<FeatureKind, 6> kAllFeatureKinds = {
    FeatureKind::mfcc20,   FeatureKind::mfcc30,    FeatureKind::pncc,
    FeatureKind::mfbank8k, FeatureKind::mfbank16k, FeatureKind::gfbank};

inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::mfcc20: return "mfcc20";
    case FeatureKind::mfcc30: return "mfcc30";
    case FeatureKind::pncc: return "pncc";
    case FeatureKind::mfbank8k: return "mfbank8k";
    case FeatureKind::mfbank16k: return "mfbank16k";
    case FeatureKind::gfbank: return "gfbank";
  }
  return "unknown";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  for (FeatureKind k : kAllFeatureKinds)
    if (to_string(k) == s) return k;
  throw ConfigError("unknown feature kind '" + std::string(s) + "'");
}

/// Output dimension of each extractor (after deltas where they apply).
inline constexpr int feature_dim(FeatureKind k) {
  switch (k) {
    case FeatureKind::mfcc20: return 60;
    case FeatureKind::mfcc30: return 30;
    case FeatureKind::pncc: return 60;
    case FeatureKind::mfbank8k:
    case FeatureKind::mfbank16k:
    case FeatureKind::gfbank: return 64;
  }
  return 0;
}

/// Input sample rate each extractor expects.
inline constexpr int feature_sample_rate(FeatureKind k) {
  return k == FeatureKind::mfbank8k ? 8000 : 16000;
}

/// Time-major feature sequence: one row per frame.
struct FeatureMatrix {
  Matrix frames;
  double frame_shift = 0.010;
  FeatureKind kind = FeatureKind::mfcc20;

  Index num_frames() const { return frames.rows(); }
  Index dim() const { return frames.cols(); }
};

// "FSV1" archive: magic, u32 T, u32 D, u8 kind, f32 row-major payload.
// The frame shift is not stored; readers assume 10 ms.
inline void write_fsv1(std::ostream &os, const FeatureMatrix &f) {
  os.write("FSV1", 4);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.frames.rows()));
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.frames.cols()));
  io::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(f.kind));
  for (Index t = 0; t < f.frames.rows(); ++t)
    for (Index d = 0; d < f.frames.cols(); ++d)
      io::put_le<float>(os, static_cast<float>(f.frames(t, d)));
}

inline FeatureMatrix read_fsv1(std::istream &is) {
  io::expect_tag(is, "FSV1");
  auto rows = io::get_le<std::uint32_t>(is);
  auto cols = io::get_le<std::uint32_t>(is);
  auto kind = io::get_le<std::uint8_t>(is);
  if (kind > static_cast<std::uint8_t>(FeatureKind::gfbank))
    throw FormatError("FSV1: unknown feature kind " + std::to_string(kind));
  FeatureMatrix f;
  f.kind = static_cast<FeatureKind>(kind);
  f.frames.resize(rows, cols);
  for (Index t = 0; t < f.frames.rows(); ++t)
    for (Index d = 0; d < f.frames.cols(); ++d)
      f.frames(t, d) = io::get_le<float>(is);
  return f;
}

inline void write_fsv1(const std::string &path, const FeatureMatrix &f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path);
  write_fsv1(os, f);
}

inline FeatureMatrix read_fsv1(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return read_fsv1(is);
}

}  // namespace fsv
