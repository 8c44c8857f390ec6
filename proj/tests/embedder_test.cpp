// tests/embedder_test.cpp

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

#include <functional>

#include "fsv/embedder.hpp"

namespace fsv {
namespace {

// |a - n| <= 1e-4 * max(|a|, |n|) with a 1e-8 absolute floor for entries
// that are zero up to rounding.
void expect_gradient(const Matrix &analytic, const std::function<double(Index, Index, double)> &f,
                     double h = 1e-5) {
  for (Index i = 0; i < analytic.rows(); ++i)
    for (Index j = 0; j < analytic.cols(); ++j) {
      const double numeric = (f(i, j, h) - f(i, j, -h)) / (2 * h);
      const double a = analytic(i, j);
      EXPECT_LE(std::abs(a - numeric), 1e-4 * std::max(std::abs(a), std::abs(numeric)) + 1e-8)
          << "entry (" << i << "," << j << ") analytic " << a << " numeric " << numeric;
    }
}

std::vector<int> random_labels(Index n, int s, Rng &rng) {
  std::uniform_int_distribution<int> d(0, s - 1);
  std::vector<int> out(n);
  for (auto &y : out) y = d(rng);
  return out;
}

TEST(StatsPool, IdenticalFramesHaveZeroStd) {
  Matrix h = Vector::LinSpaced(4, -1, 2).transpose().replicate(6, 1);
  const Vector p = stats_pool(h, Pooling::mean_std);
  EXPECT_LT((p.head(4) - h.row(0).transpose()).norm(), 1e-15);
  EXPECT_EQ(p.tail(4), Vector::Zero(4));
  bool flagged = false;
  stats_pool(h.topRows(1), Pooling::mean_std, &flagged);
  EXPECT_TRUE(flagged);
}

TEST(StatsPool, PopulationConvention) {
  Matrix h(2, 1);
  h << 0.0, 2.0;
  const Vector p = stats_pool(h, Pooling::mean_std);
  EXPECT_DOUBLE_EQ(p(0), 1.0);
  EXPECT_DOUBLE_EQ(p(1), 1.0);
  EXPECT_EQ(stats_pool(h, Pooling::mean).size(), 1);
}

TEST(StatsPool, MatchesTwoPass) {
  Rng rng(1);
  const Matrix h = randn(50, 8, rng) * 3.0;
  const Vector p = stats_pool(h, Pooling::mean_std);
  for (Index k = 0; k < 8; ++k) {
    double m = 0.0;
    for (Index t = 0; t < 50; ++t) m += h(t, k);
    m /= 50;
    double v = 0.0;
    for (Index t = 0; t < 50; ++t) v += (h(t, k) - m) * (h(t, k) - m);
    EXPECT_NEAR(p(k), m, 1e-13);
    EXPECT_NEAR(p(8 + k), std::sqrt(v / 50), 1e-13);
  }
}

TEST(SoftmaxLoss, UniformLogitsGiveLogS) {
  Rng rng(2);
  auto r = softmax_loss(randn(5, 3, rng), {0, 1, 2, 3, 4}, Matrix::Zero(7, 3));
  EXPECT_NEAR(r.loss, std::log(7.0), 1e-14);
}

TEST(SoftmaxLoss, GradientsMatchFiniteDifferences) {
  Rng rng(3);
  for (int batch = 0; batch < 20; ++batch) {
    const Matrix x = randn(4, 5, rng), w = randn(6, 5, rng);
    const auto y = random_labels(4, 6, rng);
    const auto r = softmax_loss(x, y, w);
    expect_gradient(r.grad_embeddings, [&](Index i, Index j, double h) {
      Matrix xp = x;
      xp(i, j) += h;
      return softmax_loss(xp, y, w).loss;
    });
    expect_gradient(r.grad_classifier, [&](Index i, Index j, double h) {
      Matrix wp = w;
      wp(i, j) += h;
      return softmax_loss(x, y, wp).loss;
    });
  }
}

TEST(SoftmaxLoss, PerfectLogitsApproachZero) {
  Matrix w = Matrix::Identity(3, 3);
  Matrix x = Matrix::Identity(3, 3);
  double prev = 1e300;
  for (double scale : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    const double l = softmax_loss(scale * x, {0, 1, 2}, w).loss;
    EXPECT_LT(l, prev);
    prev = l;
  }
  EXPECT_LT(prev, 1e-12);
  EXPECT_THROW(softmax_loss(x, {0, 1, 3}, w), ConfigError);
  EXPECT_THROW(softmax_loss(x, {0, 1}, w), DimensionError);
}

TEST(Asoftmax, MarginOneIsNormalisedSoftmax) {
  Rng rng(4);
  const Matrix x = randn(6, 4, rng), w = randn(5, 4, rng);
  const auto y = random_labels(6, 5, rng);
  const Matrix w_hat = w.rowwise().normalized();
  const auto a = asoftmax_loss(x, y, w, 1, 0.0);
  const auto s = softmax_loss(x, y, w_hat);
  EXPECT_NEAR(a.loss, s.loss, 1e-10);
  EXPECT_LT((a.grad_embeddings - s.grad_embeddings).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Asoftmax, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  for (int m : {1, 2, 4})
    for (double lambda : {0.0, 5.0})
      for (int batch = 0; batch < 20; ++batch) {
        const Matrix x = randn(3, 4, rng) * 2.0, w = randn(5, 4, rng);
        const auto y = random_labels(3, 5, rng);
        const auto r = asoftmax_loss(x, y, w, m, lambda);
        expect_gradient(r.grad_embeddings, [&](Index i, Index j, double h) {
          Matrix xp = x;
          xp(i, j) += h;
          return asoftmax_loss(xp, y, w, m, lambda).loss;
        });
        expect_gradient(r.grad_classifier, [&](Index i, Index j, double h) {
          Matrix wp = w;
          wp(i, j) += h;
          return asoftmax_loss(x, y, wp, m, lambda).loss;
        });
      }
}

TEST(Asoftmax, HandPlacedAngle) {
  // Target class at pi/8 from x with |x| = 2: psi = cos(4 pi / 8) = 0.
  const double th = kPi / 8;
  Matrix x(1, 2);
  x << 2.0, 0.0;
  Matrix w(2, 2);
  w << std::cos(th), std::sin(th), 0.0, 1.0;
  const auto r = asoftmax_loss(x, {0}, w, 4, 0.0);
  const double target = 2.0 * asoftmax_psi(th, 4);
  EXPECT_NEAR(target, 0.0, 1e-15);
  const double other = 2.0 * 0.0;
  EXPECT_NEAR(r.loss, std::log(std::exp(target) + std::exp(other)) - target, 1e-12);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-12);
}

TEST(Asoftmax, PsiContinuousAtBoundariesAndBelowCosine) {
  for (int m : {1, 2, 3, 4})
    for (int k = 1; k < m; ++k) {
      const double th = k * kPi / m;
      EXPECT_LT(std::abs(asoftmax_psi_branch(th, m, k - 1) - asoftmax_psi_branch(th, m, k)), 1e-10);
    }
  for (int m : {2, 3, 4})
    for (int i = 0; i <= 10000; ++i) {
      const double th = kPi * i / 10000.0;
      EXPECT_LE(asoftmax_psi(th, m), std::cos(th) + 1e-12) << m << " " << th;
    }
}

TEST(Asoftmax, LossFallsTowardModifiedSoftmaxAsLambdaGrows) {
  Rng rng(6);
  const Matrix x = randn(8, 5, rng), w = randn(4, 5, rng);
  const auto y = random_labels(8, 4, rng);
  const double limit = softmax_loss(x, y, w.rowwise().normalized()).loss;
  double prev = 1e300;
  for (double lambda : {0.0, 1.0, 10.0, 100.0, 1e4, 1e7}) {
    const double l = asoftmax_loss(x, y, w, 4, lambda).loss;
    EXPECT_LE(l, prev + 1e-14);
    EXPECT_GE(l, limit - 1e-12);
    prev = l;
  }
  EXPECT_NEAR(prev, limit, 1e-5);
}

TEST(Asoftmax, ZeroEmbeddingIsAnError) {
  EXPECT_THROW(asoftmax_loss(Matrix::Zero(1, 3), {0}, Matrix::Identity(2, 3), 4, 0.0), DegenerateError);
  AsoftmaxConfig cfg;
  EXPECT_EQ(cfg.margin, 4);
  EXPECT_DOUBLE_EQ(cfg.lambda_at(0), 1000.0);
  EXPECT_DOUBLE_EQ(cfg.lambda_at(100000), 5.0);
}

ToyEmbedNet small_net(Pooling pooling, LossType loss, std::uint64_t seed = 7) {
  return ToyEmbedNet::create(3, 5, 4, 3, pooling, loss, seed);
}

TEST(ToyEmbedNet, NetworkGradientsMatchFiniteDifferences) {
  Rng rng(8);
  for (auto pooling : {Pooling::mean, Pooling::mean_std})
    for (auto loss : {LossType::softmax, LossType::asoftmax}) {
      auto net = small_net(pooling, loss);
      for (auto &l : net.encoder) l.b = Vector::Constant(l.b.size(), 0.1);
      std::vector<Matrix> utts{randn(6, 3, rng), randn(4, 3, rng)};
      const std::vector<int> labels{0, 2};
      const long step = 500;
      auto g = net.zero_gradients();
      net.batch_loss(utts, labels, step, &g);
      auto loss_with = [&](auto mutate) {
        return [&, mutate](Index i, Index j, double h) {
          ToyEmbedNet p = net;
          mutate(p, i, j, h);
          return p.batch_loss(utts, labels, step, nullptr).loss;
        };
      };
      for (std::size_t l = 0; l < net.encoder.size(); ++l) {
        expect_gradient(g.encoder[l].w, loss_with([l](ToyEmbedNet &p, Index i, Index j, double h) {
                          p.encoder[l].w(i, j) += h;
                        }));
        expect_gradient(g.encoder[l].b, loss_with([l](ToyEmbedNet &p, Index i, Index, double h) {
                          p.encoder[l].b(i) += h;
                        }));
      }
      expect_gradient(g.embed.w, loss_with([](ToyEmbedNet &p, Index i, Index j, double h) {
                        p.embed.w(i, j) += h;
                      }));
      expect_gradient(g.classifier, loss_with([](ToyEmbedNet &p, Index i, Index j, double h) {
                        p.classifier(i, j) += h;
                      }));
    }
}

// Speakers are Gaussian clouds with distinct means; each utterance adds a
// small session offset.
void gaussian_speakers(int speakers, int utts_per, Index frames, Index dim, double spread,
                       Rng &rng, std::vector<Matrix> &utts, std::vector<int> &labels) {
  const Matrix means = randn(speakers, dim, rng) * spread;
  for (int s = 0; s < speakers; ++s)
    for (int u = 0; u < utts_per; ++u) {
      const RowVector session = randn(1, dim, rng) * 0.3;
      Matrix x = randn(frames, dim, rng);
      x.rowwise() += means.row(s) + session;
      utts.push_back(x);
      labels.push_back(s);
    }
}

TEST(TrainToy, SeparatesTwoGaussianSpeakers) {
  Rng rng(9);
  std::vector<Matrix> utts;
  std::vector<int> labels;
  gaussian_speakers(2, 20, 30, 6, 1.5, rng, utts, labels);
  for (auto loss : {LossType::softmax, LossType::asoftmax}) {
    auto net = ToyEmbedNet::create(6, 16, 8, 2, Pooling::mean, loss, 1);
    EmbedTrainConfig cfg;
    cfg.steps = 200;
    cfg.batch_size = 8;
    auto res = train_toy(net, utts, labels, cfg);
    EXPECT_EQ(res.loss.size(), 200u);
    EXPECT_GT(classification_accuracy(net, utts, labels), 0.95) << to_string(loss);
    if (loss == LossType::asoftmax) {
      for (Index j = 0; j < 2; ++j) EXPECT_NEAR(net.classifier.row(j).norm(), 1.0, 1e-8);
    }
  }
}

TEST(TrainToy, ZeroLearningRateLeavesParameters) {
  Rng rng(10);
  std::vector<Matrix> utts;
  std::vector<int> labels;
  gaussian_speakers(3, 4, 10, 3, 1.0, rng, utts, labels);
  auto net = small_net(Pooling::mean_std, LossType::softmax);
  const auto before = net;
  EmbedTrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.steps = 5;
  train_toy(net, utts, labels, cfg);
  EXPECT_EQ(net.encoder[0].w, before.encoder[0].w);
  EXPECT_EQ(net.embed.w, before.embed.w);
  EXPECT_EQ(net.classifier, before.classifier);
}

TEST(TrainToy, DivergenceAborts) {
  Rng rng(11);
  std::vector<Matrix> utts;
  std::vector<int> labels;
  gaussian_speakers(3, 4, 10, 3, 1.0, rng, utts, labels);
  for (auto &u : utts) u *= 1e150;
  auto net = small_net(Pooling::mean, LossType::softmax);
  EmbedTrainConfig cfg;
  cfg.learning_rate = 1e10;
  cfg.steps = 20;
  EXPECT_THROW(train_toy(net, utts, labels, cfg), TrainingError);
  std::vector<int> one_speaker(labels.size(), 0);
  EXPECT_THROW(train_toy(net, utts, one_speaker, cfg), ConfigError);
}

// Mean pairwise cosine over same-speaker (or different-speaker) pairs after
// removing the global embedding mean.
double mean_pair_cosine(const ToyEmbedNet &net, const std::vector<Matrix> &utts,
                        const std::vector<int> &labels, bool same_speaker) {
  Matrix e(static_cast<Index>(utts.size()), net.embed_dim());
  for (std::size_t i = 0; i < utts.size(); ++i)
    e.row(static_cast<Index>(i)) = net.forward(utts[i]).embedding.transpose();
  e.rowwise() -= e.colwise().mean();
  e.rowwise().normalize();
  double acc = 0.0;
  int n = 0;
  for (Index i = 0; i < e.rows(); ++i)
    for (Index j = i + 1; j < e.rows(); ++j)
      if ((labels[i] == labels[j]) == same_speaker) {
        acc += e.row(i).dot(e.row(j));
        ++n;
      }
  return acc / n;
}

TEST(TrainToy, AsoftmaxTightensSpeakerClusters) {
  for (std::uint64_t seed : {12u, 13u}) {
    Rng rng(seed);
    std::vector<Matrix> utts;
    std::vector<int> labels;
    gaussian_speakers(8, 10, 30, 10, 0.8, rng, utts, labels);
    EmbedTrainConfig cfg;
    cfg.steps = 1200;
    cfg.batch_size = 16;
    auto soft = ToyEmbedNet::create(10, 32, 16, 8, Pooling::mean, LossType::softmax, 3);
    auto ang = ToyEmbedNet::create(10, 32, 16, 8, Pooling::mean, LossType::asoftmax, 3);
    train_toy(soft, utts, labels, cfg);
    train_toy(ang, utts, labels, cfg);
    EXPECT_GE(mean_pair_cosine(ang, utts, labels, true), mean_pair_cosine(soft, utts, labels, true));
    EXPECT_LT(mean_pair_cosine(ang, utts, labels, false), mean_pair_cosine(soft, utts, labels, false));
  }
}

TEST(ExtractEmbedding, DeterministicAndDuplicationInvariant) {
  Rng rng(13);
  auto net = small_net(Pooling::mean, LossType::asoftmax);
  const Matrix x = randn(12, 3, rng);
  const auto a = extract_embedding(net, x), b = extract_embedding(net, x);
  EXPECT_EQ(a.vector, b.vector);
  EXPECT_EQ(a.dim(), 4);
  EXPECT_EQ(a.extractor, "asoftmax");
  Matrix twice(24, 3);
  twice << x, x;
  EXPECT_LT((extract_embedding(net, twice).vector - a.vector).norm(), 1e-13);
  Matrix reversed = x.colwise().reverse();
  EXPECT_LT((extract_embedding(net, reversed).vector - a.vector).norm(), 1e-13);
  EXPECT_THROW(extract_embedding(net, Matrix(0, 3)), TooShortError);
  EXPECT_THROW(extract_embedding(net, randn(4, 2, rng)), DimensionError);
}

TEST(ExtractEmbedding, MatchesLayerByLayerRecomputation) {
  Rng rng(14);
  auto net = small_net(Pooling::mean_std, LossType::softmax);
  for (auto &l : net.encoder) l.b = randn(l.b.size(), 1, rng);
  net.embed.b = randn(4, 1, rng);
  const Matrix x = randn(9, 3, rng);
  const Index hidden = 5;
  Vector sum = Vector::Zero(hidden), sq = Vector::Zero(hidden);
  std::vector<Vector> outs;
  for (Index t = 0; t < 9; ++t) {
    Vector h = x.row(t).transpose();
    for (const auto &l : net.encoder) {
      Vector a = l.w * h + l.b;
      for (Index k = 0; k < a.size(); ++k) a(k) = a(k) > 0 ? a(k) : 0.0;
      h = a;
    }
    outs.push_back(h);
    sum += h;
  }
  const Vector mean = sum / 9.0;
  for (const auto &h : outs) sq += (h - mean).cwiseAbs2();
  Vector pooled(2 * hidden);
  pooled << mean, (sq / 9.0).cwiseSqrt();
  const Vector expected = net.embed.w * pooled + net.embed.b;
  EXPECT_LT((extract_embedding(net, x).vector - expected).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
}  // namespace fsv
