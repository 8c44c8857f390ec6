// fsv/binary_io.hpp

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
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "fsv/common.hpp"

// Little-endian primitives shared by the binary archive formats.
namespace fsv::io {

template <typename T>
void put_le(std::ostream &os, T v) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), sizeof(T));
}

template <typename T>
T get_le(std::istream &is) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), sizeof(T))) throw FormatError("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

inline std::string get_tag(std::istream &is) {
  char tag[4];
  if (!is.read(tag, 4)) throw FormatError("unexpected end of file");
  return {tag, 4};
}

inline void expect_tag(std::istream &is, const std::string &tag) {
  std::string got = get_tag(is);
  if (got != tag) throw FormatError("expected '" + tag + "', found '" + got + "'");
}

inline void put_string(std::ostream &os, const std::string &s) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream &is) {
  auto n = get_le<std::uint32_t>(is);
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) throw FormatError("unexpected end of file");
  return s;
}

/// f64 matrix: u32 rows, u32 cols, column-major payload.
inline void put_matrix(std::ostream &os, const Matrix &m) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) put_le<double>(os, m(i, j));
}

inline Matrix get_matrix(std::istream &is) {
  auto rows = get_le<std::uint32_t>(is);
  auto cols = get_le<std::uint32_t>(is);
  Matrix m(rows, cols);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = get_le<double>(is);
  return m;
}

inline void put_vector(std::ostream &os, const Vector &v) { put_matrix(os, v); }

inline Vector get_vector(std::istream &is) {
  Matrix m = get_matrix(is);
  if (m.cols() != 1) throw FormatError("expected a column vector");
  return m.col(0);
}

}  // namespace fsv::io
