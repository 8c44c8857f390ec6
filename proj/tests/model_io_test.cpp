// tests/model_io_test.cpp

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

#include <sstream>

#include "fsv/model_io.hpp"

namespace fsv {
namespace {

ModelBundle sample_bundle() {
  Rng rng(1);
  ModelBundle b;
  Matrix x = randn(400, 3, rng);
  UbmConfig uc;
  uc.components = 2;
  uc.iterations = 2;
  b.ubm = ubm_train_em(x, uc).ubm;
  b.tmatrix = randn(6, 2, rng);
  auto net = ToyEmbedNet::create(3, 5, 4, 3, Pooling::mean_std, LossType::asoftmax, 7);
  net.asoftmax.margin = 2;
  b.embedder = net;
  Matrix e = randn(50, 4, rng);
  b.whitener = Whitener::fit(e);
  b.coral = coral_fit(e, randn(60, 4, rng) * 2.0);
  b.plda = PldaModel{Vector::Ones(4), randn(4, 2, rng), Matrix::Identity(4, 4) * 0.5};
  return b;
}

TEST(ModelIo, RoundTripAllSections) {
  auto b = sample_bundle();
  std::stringstream ss;
  write_model(ss, b);
  auto r = read_model(ss);
  ASSERT_TRUE(r.ubm && r.tmatrix && r.embedder && r.whitener && r.coral && r.plda);
  EXPECT_EQ(r.ubm->weights(), b.ubm->weights());
  EXPECT_EQ(r.ubm->covariances()[1], b.ubm->covariances()[1]);
  EXPECT_EQ(*r.tmatrix, *b.tmatrix);
  EXPECT_EQ(r.embedder->encoder[1].w, b.embedder->encoder[1].w);
  EXPECT_EQ(r.embedder->classifier, b.embedder->classifier);
  EXPECT_EQ(r.embedder->pooling, Pooling::mean_std);
  EXPECT_EQ(r.embedder->loss, LossType::asoftmax);
  EXPECT_EQ(r.embedder->asoftmax.margin, 2);
  EXPECT_EQ(r.whitener->transform, b.whitener->transform);
  EXPECT_EQ(r.coral->a, b.coral->a);
  EXPECT_EQ(r.plda->f, b.plda->f);
  Matrix f = Matrix::Random(7, 3);
  EXPECT_EQ(extract_embedding(*r.embedder, f).vector, extract_embedding(*b.embedder, f).vector);
  EXPECT_NO_THROW(r.tv_model());
}

TEST(ModelIo, PartialBundle) {
  ModelBundle b;
  b.plda = sample_bundle().plda;
  std::stringstream ss;
  write_model(ss, b);
  auto r = read_model(ss);
  EXPECT_TRUE(r.plda);
  EXPECT_FALSE(r.ubm);
  EXPECT_THROW(r.tv_model(), FormatError);
}

TEST(ModelIo, SkipsUnknownSections) {
  std::stringstream ss;
  ss.write("FSVM", 4);
  io::put_le<std::uint32_t>(ss, 1);
  io::put_le<std::uint32_t>(ss, 2);
  ss.write("XTRA", 4);
  io::put_le<std::uint32_t>(ss, 1);
  io::put_le<std::uint64_t>(ss, 3);
  ss.write("abc", 3);
  auto b = sample_bundle();
  ss.write("PLDA", 4);
  io::put_le<std::uint32_t>(ss, 1);
  std::string payload = detail::encode_plda(*b.plda);
  io::put_le<std::uint64_t>(ss, payload.size());
  ss.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  auto r = read_model(ss);
  ASSERT_TRUE(r.plda);
  EXPECT_EQ(r.plda->sigma, b.plda->sigma);
}

TEST(ModelIo, Rejections) {
  std::stringstream bad("FSVX");
  EXPECT_THROW(read_model(bad), FormatError);
  std::stringstream future;
  future.write("FSVM", 4);
  io::put_le<std::uint32_t>(future, 99);
  io::put_le<std::uint32_t>(future, 0);
  EXPECT_THROW(read_model(future), FormatError);
  std::stringstream full;
  write_model(full, sample_bundle());
  std::string bytes = full.str();
  std::stringstream cut(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(read_model(cut), FormatError);
  EXPECT_THROW(read_model("/nonexistent/model.fsvm"), FormatError);
}

TEST(EmbeddingArchive, RoundTrip) {
  Rng rng(2);
  EmbeddingSet set;
  Matrix x = randn(5, 3, rng);
  for (int i = 0; i < 5; ++i) set.append("utt-" + std::to_string(i), {x.row(i).transpose(), "asoftmax", true});
  std::stringstream ss;
  write_embeddings(ss, set);
  auto r = read_embeddings(ss);
  EXPECT_EQ(r.ids, set.ids);
  EXPECT_EQ(r.extractor, "asoftmax");
  EXPECT_TRUE(r.dereverberated);
  EXPECT_TRUE(r.data.isApprox(set.data.cast<float>().cast<double>(), 0.0));
  std::stringstream bad("FSVM");
  EXPECT_THROW(read_embeddings(bad), FormatError);
}

}  // namespace
}  // namespace fsv
