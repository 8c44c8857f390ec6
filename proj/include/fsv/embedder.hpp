// fsv/embedder.hpp

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
#include <numeric>
#include <string>
#include <vector>

#include "fsv/embedding.hpp"
#include "fsv/feature_matrix.hpp"

namespace fsv {

enum class Pooling : std::uint8_t { mean = 0, mean_std = 1 };
enum class LossType : std::uint8_t { softmax = 0, asoftmax = 1 };

inline std::string to_string(LossType l) { return l == LossType::softmax ? "softmax" : "asoftmax"; }
inline std::string to_string(Pooling p) { return p == Pooling::mean ? "mean" : "mean_std"; }

inline LossType parse_loss_type(const std::string &s) {
  if (s == "softmax") return LossType::softmax;
  if (s == "asoftmax" || s == "a-softmax") return LossType::asoftmax;
  throw ConfigError("unknown loss '" + s + "' (softmax|asoftmax)");
}

inline Pooling parse_pooling(const std::string &s) {
  if (s == "mean") return Pooling::mean;
  if (s == "mean_std" || s == "mean+std") return Pooling::mean_std;
  throw ConfigError("unknown pooling '" + s + "' (mean|mean_std)");
}

struct AsoftmaxConfig {
  int margin = 4;
  double lambda_start = 1000.0;
  double lambda_decay = 0.99;
  double lambda_min = 5.0;

  void validate() const {
    require(margin >= 1, "asoftmax: margin must be >= 1");
    require(lambda_min >= 0 && lambda_start >= 0, "asoftmax: lambda must be non-negative");
    require(lambda_decay > 0 && lambda_decay <= 1, "asoftmax: lambda decay must be in (0, 1]");
  }

  double lambda_at(long step) const {
    return std::max(lambda_min, lambda_start * std::pow(lambda_decay, static_cast<double>(step)));
  }
};

/// Branch k of the angular margin function on [k pi/m, (k+1) pi/m].
inline double asoftmax_psi_branch(double theta, int m, int k) {
  return (k % 2 ? -1.0 : 1.0) * std::cos(m * theta) - 2.0 * k;
}

inline int asoftmax_branch(double theta, int m) {
  const int k = static_cast<int>(std::floor(m * theta / kPi));
  return std::clamp(k, 0, m - 1);
}

inline double asoftmax_psi(double theta, int m) {
  return asoftmax_psi_branch(theta, m, asoftmax_branch(theta, m));
}

namespace detail {

// psi as a function of c = cos(theta) and its derivative, via Chebyshev
// recurrences: cos(m theta) = T_m(c), d/dc T_m = m U_{m-1}(c).
inline std::pair<double, double> psi_of_cos(double c, int m) {
  c = std::clamp(c, -1.0, 1.0);
  double t_prev = 1.0, t = c;   // T_0, T_1
  double u_prev = 0.0, u = 1.0;  // U_{-1}, U_0
  for (int n = 1; n < m; ++n) {
    const double t_next = 2.0 * c * t - t_prev;
    const double u_next = 2.0 * c * u - u_prev;
    t_prev = t;
    t = t_next;
    u_prev = u;
    u = u_next;
  }
  const int k = asoftmax_branch(std::acos(c), m);
  const double sign = k % 2 ? -1.0 : 1.0;
  return {sign * t - 2.0 * k, sign * m * u};
}

}  // namespace detail

struct LossResult {
  double loss = 0.0;
  Matrix grad_embeddings;  // B x E
  Matrix grad_classifier;  // S x E
  Index correct = 0;       // argmax predictions matching the labels
};

namespace detail {

inline void check_loss_inputs(const Matrix &x, const std::vector<int> &labels, const Matrix &w) {
  require_dims(x.rows() == static_cast<Index>(labels.size()), "loss: label count != batch size");
  require_dims(x.cols() == w.cols(), "loss: embedding dim != classifier dim");
  require_dims(x.rows() > 0, "loss: empty batch");
  for (int y : labels)
    if (y < 0 || y >= w.rows())
      throw ConfigError("loss: label " + std::to_string(y) + " out of range [0, " +
                        std::to_string(w.rows()) + ")");
}

// Cross-entropy of one logit row; writes dloss/dlogits (scaled by `scale`).
inline double cross_entropy(const Vector &logits, int label, double scale, Vector &grad) {
  const double lse = log_sum_exp(logits);
  grad = ((logits.array() - lse).exp() * scale).matrix();
  grad(label) -= scale;
  return lse - logits(label);
}

}  // namespace detail

/// Mean cross-entropy with bias-free logits X W'.
inline LossResult softmax_loss(const Matrix &x, const std::vector<int> &labels, const Matrix &w) {
  detail::check_loss_inputs(x, labels, w);
  const Index b = x.rows();
  const Matrix logits = x * w.transpose();
  Matrix g(b, w.rows());
  LossResult out;
  for (Index i = 0; i < b; ++i) {
    Vector gi;
    out.loss += detail::cross_entropy(logits.row(i).transpose(), labels[i], 1.0 / b, gi) / b;
    g.row(i) = gi.transpose();
    Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out.correct += arg == labels[i];
  }
  out.grad_embeddings = g * w;
  out.grad_classifier = g.transpose() * x;
  return out;
}

/// Angular-margin softmax. Classifier rows are normalised inside the loss
/// (gradients flow through the normalisation); target logit is
/// |x| (lambda cos + psi) / (1 + lambda), other logits |x| cos.
inline LossResult asoftmax_loss(const Matrix &x, const std::vector<int> &labels, const Matrix &w,
                                int margin, double lambda) {
  detail::check_loss_inputs(x, labels, w);
  require(margin >= 1, "asoftmax: margin must be >= 1");
  require(lambda >= 0, "asoftmax: lambda must be non-negative");
  const Index b = x.rows(), s = w.rows();
  const Vector w_norm = w.rowwise().norm();
  if (w_norm.minCoeff() <= 0) throw DegenerateError("asoftmax: zero classifier row");
  const Matrix w_hat = w_norm.cwiseInverse().asDiagonal() * w;
  LossResult out;
  out.grad_embeddings = Matrix::Zero(b, x.cols());
  out.grad_classifier = Matrix::Zero(s, x.cols());
  for (Index i = 0; i < b; ++i) {
    const Vector xi = x.row(i).transpose();
    const double xn = xi.norm();
    if (xn <= 0) throw DegenerateError("asoftmax: zero-norm embedding (angle undefined)");
    const Vector x_hat = xi / xn;
    const Vector cos = w_hat * x_hat;
    const int y = labels[i];
    const auto [psi, dpsi] = detail::psi_of_cos(cos(y), margin);
    const double g = (lambda * cos(y) + psi) / (1.0 + lambda);
    const double dg = (lambda + dpsi) / (1.0 + lambda);
    Vector logits = xn * cos;
    logits(y) = xn * g;
    Vector dl;
    out.loss += detail::cross_entropy(logits, y, 1.0 / b, dl) / b;
    Index arg = 0;
    cos.maxCoeff(&arg);
    out.correct += arg == y;
    for (Index j = 0; j < s; ++j) {
      if (dl(j) == 0.0) continue;
      const Vector wj = w_hat.row(j).transpose();
      if (j == y) {
        out.grad_embeddings.row(i) += dl(j) * (g * x_hat + dg * (wj - cos(j) * x_hat)).transpose();
        out.grad_classifier.row(j) +=
            dl(j) * xn * dg / w_norm(j) * (x_hat - cos(j) * wj).transpose();
      } else {
        out.grad_embeddings.row(i) += dl(j) * wj.transpose();
        out.grad_classifier.row(j) += dl(j) / w_norm(j) * (xi - xn * cos(j) * wj).transpose();
      }
    }
  }
  return out;
}

/// Mean (and population standard deviation) over frames.
inline Vector stats_pool(const Matrix &h, Pooling pooling, bool *std_degenerate = nullptr) {
  require_dims(h.rows() >= 1, "stats_pool: no frames");
  const Vector mean = h.colwise().mean().transpose();
  if (std_degenerate) *std_degenerate = false;
  if (pooling == Pooling::mean) return mean;
  const Matrix centered = h.rowwise() - mean.transpose();
  const Vector sd = (centered.colwise().squaredNorm().transpose() / static_cast<double>(h.rows()))
                        .cwiseSqrt();
  if (std_degenerate) *std_degenerate = h.rows() < 2;
  Vector out(2 * h.cols());
  out << mean, sd;
  return out;
}

struct Affine {
  Matrix w;  // out x in
  Vector b;

  Index in_dim() const { return w.cols(); }
  Index out_dim() const { return w.rows(); }
};

struct NetGradients {
  std::vector<Affine> encoder;
  Affine embed;
  Matrix classifier;
};

/// Frame encoder (affine+ReLU layers), statistics pooling, affine embedding
/// layer and a bias-free speaker classifier.
class ToyEmbedNet {
 public:
  std::vector<Affine> encoder;
  Affine embed;
  Matrix classifier;  // S x E
  Pooling pooling = Pooling::mean;
  LossType loss = LossType::softmax;
  AsoftmaxConfig asoftmax;

  static ToyEmbedNet create(Index input_dim, Index hidden, Index embed_dim, Index speakers,
                            Pooling pooling, LossType loss, std::uint64_t seed) {
    require(input_dim >= 1 && hidden >= 1 && embed_dim >= 1, "embedder: dimensions must be >= 1");
    require(speakers >= 2, "embedder: need at least 2 speakers");
    Rng rng(seed);
    ToyEmbedNet net;
    net.pooling = pooling;
    net.loss = loss;
    auto layer = [&](Index in, Index out) {
      return Affine{randn(out, in, rng) * std::sqrt(2.0 / in), Vector::Zero(out)};
    };
    net.encoder.push_back(layer(input_dim, hidden));
    net.encoder.push_back(layer(hidden, hidden));
    const Index pooled = pooling == Pooling::mean ? hidden : 2 * hidden;
    net.embed = Affine{randn(embed_dim, pooled, rng) * std::sqrt(1.0 / pooled), Vector::Zero(embed_dim)};
    net.classifier = randn(speakers, embed_dim, rng);
    net.normalize_classifier();
    return net;
  }

  Index input_dim() const { return encoder.front().in_dim(); }
  Index embed_dim() const { return embed.out_dim(); }
  Index num_speakers() const { return classifier.rows(); }

  void normalize_classifier() {
    for (Index j = 0; j < classifier.rows(); ++j) {
      const double n = classifier.row(j).norm();
      if (n <= 0) throw DegenerateError("embedder: zero classifier row");
      classifier.row(j) /= n;
    }
  }

  void validate() const {
    require_dims(!encoder.empty(), "embedder: no encoder layers");
    for (std::size_t l = 1; l < encoder.size(); ++l)
      require_dims(encoder[l].in_dim() == encoder[l - 1].out_dim(), "embedder: encoder shapes");
    const Index hidden = encoder.back().out_dim();
    require_dims(embed.in_dim() == (pooling == Pooling::mean ? hidden : 2 * hidden),
                 "embedder: embed layer does not match pooling");
    require_dims(classifier.cols() == embed_dim(), "embedder: classifier dim");
    for (const auto &a : encoder) require_dims(a.b.size() == a.out_dim(), "embedder: bias size");
  }

  struct Trace {
    std::vector<Matrix> inputs;  // input to each encoder layer
    std::vector<Matrix> pre;     // pre-activation of each encoder layer
    Matrix hidden;               // encoder output
    Vector pooled;
    Vector embedding;
  };

  Trace forward(const Matrix &x) const {
    require_dims(x.rows() >= 1, "embedder: empty feature sequence");
    require_dims(x.cols() == input_dim(), "embedder: feature dim " + std::to_string(x.cols()) +
                                              " != net input dim " + std::to_string(input_dim()));
    Trace tr;
    Matrix h = x;
    for (const auto &layer : encoder) {
      tr.inputs.push_back(h);
      Matrix a = (h * layer.w.transpose()).rowwise() + layer.b.transpose();
      tr.pre.push_back(a);
      h = a.cwiseMax(0.0);
    }
    tr.hidden = h;
    tr.pooled = stats_pool(h, pooling);
    tr.embedding = embed.w * tr.pooled + embed.b;
    return tr;
  }

  /// Accumulates parameter gradients given dloss/dembedding.
  void backward(const Trace &tr, const Vector &grad_embedding, NetGradients &acc) const {
    acc.embed.w.noalias() += grad_embedding * tr.pooled.transpose();
    acc.embed.b += grad_embedding;
    const Vector gp = embed.w.transpose() * grad_embedding;
    const Index t = tr.hidden.rows(), hdim = tr.hidden.cols();
    Matrix gh = gp.head(hdim).transpose().replicate(t, 1) / static_cast<double>(t);
    if (pooling == Pooling::mean_std) {
      const Vector sd = tr.pooled.tail(hdim);
      const RowVector mean = tr.pooled.head(hdim).transpose();
      for (Index k = 0; k < hdim; ++k) {
        if (sd(k) <= 0) continue;
        gh.col(k) += gp(hdim + k) / (t * sd(k)) * (tr.hidden.col(k).array() - mean(k)).matrix();
      }
    }
    for (std::size_t l = encoder.size(); l-- > 0;) {
      const Matrix ga = (tr.pre[l].array() > 0).select(gh, 0.0);
      acc.encoder[l].w.noalias() += ga.transpose() * tr.inputs[l];
      acc.encoder[l].b += ga.colwise().sum().transpose();
      if (l > 0) gh = ga * encoder[l].w;
    }
  }

  NetGradients zero_gradients() const {
    NetGradients g;
    for (const auto &a : encoder) g.encoder.push_back({Matrix::Zero(a.w.rows(), a.w.cols()), Vector::Zero(a.b.size())});
    g.embed = {Matrix::Zero(embed.w.rows(), embed.w.cols()), Vector::Zero(embed.b.size())};
    g.classifier = Matrix::Zero(classifier.rows(), classifier.cols());
    return g;
  }

  /// Loss for a batch of utterances under the net's configured loss.
  LossResult batch_loss(const std::vector<Matrix> &utts, const std::vector<int> &labels,
                        long step, NetGradients *grads) const {
    Matrix emb(static_cast<Index>(utts.size()), embed_dim());
    std::vector<Trace> traces;
    for (std::size_t i = 0; i < utts.size(); ++i) {
      traces.push_back(forward(utts[i]));
      emb.row(static_cast<Index>(i)) = traces.back().embedding.transpose();
    }
    LossResult r = loss == LossType::softmax
                       ? softmax_loss(emb, labels, classifier)
                       : asoftmax_loss(emb, labels, classifier, asoftmax.margin, asoftmax.lambda_at(step));
    if (grads) {
      grads->classifier += r.grad_classifier;
      for (std::size_t i = 0; i < utts.size(); ++i)
        backward(traces[i], r.grad_embeddings.row(static_cast<Index>(i)).transpose(), *grads);
    }
    return r;
  }
};

inline Embedding extract_embedding(const ToyEmbedNet &net, const Matrix &frames) {
  if (frames.rows() == 0) throw TooShortError("extract_embedding: empty feature sequence");
  return {net.forward(frames).embedding, to_string(net.loss), false};
}

inline Embedding extract_embedding(const ToyEmbedNet &net, const FeatureMatrix &features) {
  return extract_embedding(net, features.frames);
}

struct EmbedTrainConfig {
  int steps = 200;
  int batch_size = 16;
  double learning_rate = 0.05;
  Index segment_frames = 0;  // random crop length during training; 0 = full utterance
  std::uint64_t seed = 0;

  void validate() const {
    require(steps >= 0, "train: steps must be >= 0");
    require(batch_size >= 1, "train: batch size must be >= 1");
    require(learning_rate >= 0, "train: learning rate must be >= 0");
    require(segment_frames >= 0, "train: segment frames must be >= 0");
  }
};

struct EmbedTrainResult {
  std::vector<double> loss;      // per step
  std::vector<double> accuracy;  // per step, on the minibatch
};

/// Minibatch SGD over the whole network.
inline EmbedTrainResult train_toy(ToyEmbedNet &net, const std::vector<Matrix> &utts,
                                  const std::vector<int> &labels, const EmbedTrainConfig &cfg) {
  cfg.validate();
  net.validate();
  if (net.loss == LossType::asoftmax) net.asoftmax.validate();
  require_dims(utts.size() == labels.size(), "train: utterance/label count mismatch");
  require(!utts.empty(), "train: no training utterances");
  std::vector<int> seen(static_cast<std::size_t>(net.num_speakers()), 0);
  for (int y : labels) {
    if (y < 0 || y >= net.num_speakers()) throw ConfigError("train: label out of range");
    seen[y] = 1;
  }
  if (std::accumulate(seen.begin(), seen.end(), 0) < 2)
    throw ConfigError("train: need at least 2 speakers in the training data");
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(utts.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  EmbedTrainResult out;
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<Matrix> batch;
    std::vector<int> batch_labels;
    for (int i = 0; i < cfg.batch_size; ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::size_t u = order[cursor++];
      const Matrix &x = utts[u];
      if (cfg.segment_frames > 0 && x.rows() > cfg.segment_frames) {
        std::uniform_int_distribution<Index> start(0, x.rows() - cfg.segment_frames);
        batch.push_back(x.middleRows(start(rng), cfg.segment_frames));
      } else {
        batch.push_back(x);
      }
      batch_labels.push_back(labels[u]);
    }
    NetGradients g = net.zero_gradients();
    const LossResult r = net.batch_loss(batch, batch_labels, step, &g);
    if (!std::isfinite(r.loss))
      throw TrainingError("train: loss became non-finite at step " + std::to_string(step) +
                          " (learning rate " + std::to_string(cfg.learning_rate) + ")");
    out.loss.push_back(r.loss);
    out.accuracy.push_back(static_cast<double>(r.correct) / cfg.batch_size);
    const double lr = cfg.learning_rate;
    for (std::size_t l = 0; l < net.encoder.size(); ++l) {
      net.encoder[l].w -= lr * g.encoder[l].w;
      net.encoder[l].b -= lr * g.encoder[l].b;
    }
    net.embed.w -= lr * g.embed.w;
    net.embed.b -= lr * g.embed.b;
    net.classifier -= lr * g.classifier;
    if (net.loss == LossType::asoftmax) net.normalize_classifier();
  }
  return out;
}

/// Trains a fresh network on globally standardised frames and folds the
/// standardisation into the first layer, so extraction takes raw features.
inline ToyEmbedNet train_standardized(const std::vector<Matrix> &frames,
                                      const std::vector<int> &labels, Index hidden,
                                      Index embed_dim, Pooling pooling, LossType loss,
                                      const AsoftmaxConfig &asoftmax, const EmbedTrainConfig &tc) {
  require_dims(!frames.empty() && frames.size() == labels.size(), "train: one label per utterance");
  Index rows = 0;
  for (const auto &f : frames) {
    require_dims(f.cols() == frames.front().cols(), "train: feature dimension mismatch");
    rows += f.rows();
  }
  Matrix all(rows, frames.front().cols());
  rows = 0;
  for (const auto &f : frames) {
    all.middleRows(rows, f.rows()) = f;
    rows += f.rows();
  }
  const RowVector mu = all.colwise().mean();
  RowVector sd = ((all.rowwise() - mu).array().square().colwise().mean()).sqrt();
  for (Index d = 0; d < sd.size(); ++d)
    if (!(sd(d) > 1e-8)) sd(d) = 1.0;
  std::vector<Matrix> utts;
  for (const auto &f : frames) utts.push_back((f.rowwise() - mu).array().rowwise() / sd.array());
  const int speakers = *std::max_element(labels.begin(), labels.end()) + 1;
  auto net = ToyEmbedNet::create(all.cols(), hidden, embed_dim, speakers, pooling, loss, tc.seed);
  net.asoftmax = asoftmax;
  train_toy(net, utts, labels, tc);
  Affine &first = net.encoder.front();
  first.w = first.w * sd.cwiseInverse().asDiagonal();
  first.b -= first.w * mu.transpose();
  return net;
}

/// Fraction of utterances whose nearest classifier row (by cosine for
/// A-softmax, by logit otherwise) is the true speaker.
inline double classification_accuracy(const ToyEmbedNet &net, const std::vector<Matrix> &utts,
                                      const std::vector<int> &labels) {
  require_dims(utts.size() == labels.size() && !utts.empty(), "accuracy: bad inputs");
  Index correct = 0;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const Vector e = net.forward(utts[i]).embedding;
    Vector scores = net.classifier * e;
    if (net.loss == LossType::asoftmax) scores = scores.cwiseQuotient(net.classifier.rowwise().norm());
    Index arg = 0;
    scores.maxCoeff(&arg);
    correct += arg == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(utts.size());
}

}  // namespace fsv
