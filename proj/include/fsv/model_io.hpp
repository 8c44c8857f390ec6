// fsv/model_io.hpp

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

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "fsv/backend.hpp"
#include "fsv/binary_io.hpp"
#include "fsv/embedder.hpp"
#include "fsv/embedding.hpp"
#include "fsv/gmm.hpp"
#include "fsv/ivector.hpp"

namespace fsv {

/// Any subset of trained models, stored as one "FSVM" container.
struct ModelBundle {
  std::optional<GmmUbm> ubm;
  std::optional<Matrix> tmatrix;
  std::optional<ToyEmbedNet> embedder;
  std::optional<Whitener> whitener;
  std::optional<CoralTransform> coral;
  std::optional<PldaModel> plda;

  TotalVariabilityModel tv_model() const {
    if (!ubm || !tmatrix) throw FormatError("model bundle: i-vector extractor needs UBM and T sections");
    return TotalVariabilityModel(*ubm, *tmatrix);
  }
};

// Layout: "FSVM" u32 version, u32 sections, then per section
// tag[4] u32 version u64 bytes payload. Unknown tags are skipped.
inline constexpr std::uint32_t kFsvmVersion = 1;

namespace detail {

inline void put_affine(std::ostream &os, const Affine &a) {
  io::put_matrix(os, a.w);
  io::put_vector(os, a.b);
}

inline Affine get_affine(std::istream &is) {
  Affine a;
  a.w = io::get_matrix(is);
  a.b = io::get_vector(is);
  return a;
}

inline std::string encode_ubm(const GmmUbm &u) {
  std::ostringstream os;
  io::put_vector(os, u.weights());
  io::put_matrix(os, u.means());
  for (const auto &c : u.covariances()) io::put_matrix(os, c);
  return os.str();
}

inline GmmUbm decode_ubm(std::istream &is) {
  Vector w = io::get_vector(is);
  Matrix m = io::get_matrix(is);
  if (m.rows() != w.size()) throw FormatError("FSVM: UBM means/weights mismatch");
  std::vector<Matrix> covs;
  for (Index c = 0; c < w.size(); ++c) covs.push_back(io::get_matrix(is));
  return GmmUbm(std::move(w), std::move(m), std::move(covs));
}

inline std::string encode_net(const ToyEmbedNet &n) {
  std::ostringstream os;
  io::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(n.pooling));
  io::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(n.loss));
  io::put_le<std::int32_t>(os, n.asoftmax.margin);
  io::put_le<double>(os, n.asoftmax.lambda_start);
  io::put_le<double>(os, n.asoftmax.lambda_decay);
  io::put_le<double>(os, n.asoftmax.lambda_min);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(n.encoder.size()));
  for (const auto &a : n.encoder) put_affine(os, a);
  put_affine(os, n.embed);
  io::put_matrix(os, n.classifier);
  return os.str();
}

inline ToyEmbedNet decode_net(std::istream &is) {
  ToyEmbedNet n;
  auto pooling = io::get_le<std::uint8_t>(is);
  auto loss = io::get_le<std::uint8_t>(is);
  if (pooling > 1 || loss > 1) throw FormatError("FSVM: bad embedder enum");
  n.pooling = static_cast<Pooling>(pooling);
  n.loss = static_cast<LossType>(loss);
  n.asoftmax.margin = io::get_le<std::int32_t>(is);
  n.asoftmax.lambda_start = io::get_le<double>(is);
  n.asoftmax.lambda_decay = io::get_le<double>(is);
  n.asoftmax.lambda_min = io::get_le<double>(is);
  auto layers = io::get_le<std::uint32_t>(is);
  if (layers > 64) throw FormatError("FSVM: implausible layer count");
  for (std::uint32_t l = 0; l < layers; ++l) n.encoder.push_back(get_affine(is));
  n.embed = get_affine(is);
  n.classifier = io::get_matrix(is);
  try {
    n.validate();
  } catch (const Error &e) {
    throw FormatError(std::string("FSVM: ") + e.what());
  }
  return n;
}

inline std::string encode_whitener(const Whitener &w) {
  std::ostringstream os;
  io::put_vector(os, w.mean);
  io::put_matrix(os, w.transform);
  io::put_le<double>(os, w.ridge);
  return os.str();
}

inline Whitener decode_whitener(std::istream &is) {
  Whitener w;
  w.mean = io::get_vector(is);
  w.transform = io::get_matrix(is);
  w.ridge = io::get_le<double>(is);
  return w;
}

inline std::string encode_coral(const CoralTransform &c) {
  std::ostringstream os;
  io::put_matrix(os, c.a);
  io::put_matrix(os, c.source_cov);
  io::put_matrix(os, c.target_cov);
  io::put_le<double>(os, c.source_ridge);
  io::put_le<double>(os, c.target_ridge);
  io::put_le<std::uint8_t>(os, (c.source_degenerate ? 1 : 0) | (c.target_degenerate ? 2 : 0));
  return os.str();
}

inline CoralTransform decode_coral(std::istream &is) {
  CoralTransform c;
  c.a = io::get_matrix(is);
  c.source_cov = io::get_matrix(is);
  c.target_cov = io::get_matrix(is);
  c.source_ridge = io::get_le<double>(is);
  c.target_ridge = io::get_le<double>(is);
  auto flags = io::get_le<std::uint8_t>(is);
  c.source_degenerate = flags & 1;
  c.target_degenerate = flags & 2;
  return c;
}

inline std::string encode_plda(const PldaModel &p) {
  std::ostringstream os;
  io::put_vector(os, p.mu);
  io::put_matrix(os, p.f);
  io::put_matrix(os, p.sigma);
  return os.str();
}

inline PldaModel decode_plda(std::istream &is) {
  PldaModel p;
  p.mu = io::get_vector(is);
  p.f = io::get_matrix(is);
  p.sigma = io::get_matrix(is);
  try {
    p.validate();
  } catch (const Error &e) {
    throw FormatError(std::string("FSVM: ") + e.what());
  }
  return p;
}

}  // namespace detail

inline void write_model(std::ostream &os, const ModelBundle &b) {
  std::vector<std::pair<std::string, std::string>> sections;
  if (b.ubm) sections.emplace_back("UBM ", detail::encode_ubm(*b.ubm));
  if (b.tmatrix) {
    std::ostringstream s;
    io::put_matrix(s, *b.tmatrix);
    sections.emplace_back("TVM ", s.str());
  }
  if (b.embedder) sections.emplace_back("NET ", detail::encode_net(*b.embedder));
  if (b.whitener) sections.emplace_back("WHIT", detail::encode_whitener(*b.whitener));
  if (b.coral) sections.emplace_back("CORL", detail::encode_coral(*b.coral));
  if (b.plda) sections.emplace_back("PLDA", detail::encode_plda(*b.plda));
  os.write("FSVM", 4);
  io::put_le<std::uint32_t>(os, kFsvmVersion);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(sections.size()));
  for (const auto &[tag, payload] : sections) {
    os.write(tag.data(), 4);
    io::put_le<std::uint32_t>(os, kFsvmVersion);
    io::put_le<std::uint64_t>(os, payload.size());
    os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
}

inline ModelBundle read_model(std::istream &is) {
  io::expect_tag(is, "FSVM");
  const auto version = io::get_le<std::uint32_t>(is);
  if (version == 0 || version > kFsvmVersion)
    throw FormatError("FSVM: unsupported container version " + std::to_string(version));
  const auto count = io::get_le<std::uint32_t>(is);
  ModelBundle b;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string tag = io::get_tag(is);
    const auto sv = io::get_le<std::uint32_t>(is);
    const auto bytes = io::get_le<std::uint64_t>(is);
    if (bytes > (1ull << 34)) throw FormatError("FSVM: implausible section size");
    std::string payload(bytes, '\0');
    if (bytes && !is.read(payload.data(), static_cast<std::streamsize>(bytes)))
      throw FormatError("FSVM: truncated section '" + tag + "'");
    if (sv == 0 || sv > kFsvmVersion)
      throw FormatError("FSVM: section '" + tag + "' has unsupported version " + std::to_string(sv));
    std::istringstream s(payload);
    if (tag == "UBM ") b.ubm = detail::decode_ubm(s);
    else if (tag == "TVM ") b.tmatrix = io::get_matrix(s);
    else if (tag == "NET ") b.embedder = detail::decode_net(s);
    else if (tag == "WHIT") b.whitener = detail::decode_whitener(s);
    else if (tag == "CORL") b.coral = detail::decode_coral(s);
    else if (tag == "PLDA") b.plda = detail::decode_plda(s);
  }
  if (b.ubm && b.tmatrix && b.tmatrix->rows() != b.ubm->num_components() * b.ubm->dim())
    throw FormatError("FSVM: T matrix does not match the UBM supervector size");
  return b;
}

inline void write_model(const std::string &path, const ModelBundle &b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path);
  write_model(os, b);
}

inline ModelBundle read_model(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  try {
    return read_model(is);
  } catch (const FormatError &e) {
    throw FormatError(path + ": " + e.what());
  }
}

// "FSVE": magic, u32 N, u32 D, u8 dereverberated, extractor string,
// N id strings, f32 row-major N x D.
inline void write_embeddings(std::ostream &os, const EmbeddingSet &set) {
  set.validate();
  os.write("FSVE", 4);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.size()));
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.dim()));
  io::put_le<std::uint8_t>(os, set.dereverberated ? 1 : 0);
  io::put_string(os, set.extractor);
  for (const auto &id : set.ids) io::put_string(os, id);
  for (Index i = 0; i < set.size(); ++i)
    for (Index j = 0; j < set.dim(); ++j) io::put_le<float>(os, static_cast<float>(set.data(i, j)));
}

inline EmbeddingSet read_embeddings(std::istream &is) {
  io::expect_tag(is, "FSVE");
  const auto n = io::get_le<std::uint32_t>(is);
  const auto d = io::get_le<std::uint32_t>(is);
  EmbeddingSet set;
  set.dereverberated = io::get_le<std::uint8_t>(is) != 0;
  set.extractor = io::get_string(is);
  for (std::uint32_t i = 0; i < n; ++i) set.ids.push_back(io::get_string(is));
  set.data.resize(n, d);
  for (Index i = 0; i < set.size(); ++i)
    for (Index j = 0; j < set.dim(); ++j) set.data(i, j) = io::get_le<float>(is);
  return set;
}

inline void write_embeddings(const std::string &path, const EmbeddingSet &set) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path);
  write_embeddings(os, set);
}

inline EmbeddingSet read_embeddings(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return read_embeddings(is);
}

}  // namespace fsv
