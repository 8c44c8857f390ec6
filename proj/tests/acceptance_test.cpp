// tests/acceptance_test.cpp

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

// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
// Usage: fsv_acceptance [criterion ...]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fsv/pipeline.hpp"
#include "fsv/synth.hpp"

namespace fs = std::filesystem;
using namespace fsv;

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / "fsv_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Matrix random_spd(Index d, Rng &rng, double ridge) {
  Matrix a = randn(d, d, rng);
  return a * a.transpose() / static_cast<double>(d) + ridge * Matrix::Identity(d, d);
}

Matrix sample_gaussian(const Matrix &cov, Index n, Rng &rng) {
  Eigen::LLT<Matrix> llt(cov);
  return randn(n, cov.rows(), rng) * Matrix(llt.matrixL()).transpose();
}

std::vector<int> random_labels(Index n, int s, Rng &rng) {
  std::uniform_int_distribution<int> d(0, s - 1);
  std::vector<int> out(n);
  for (auto &y : out) y = d(rng);
  return out;
}

// ---- 1: gradients -----------------------------------------------------

// Worst |a - n| / (1e-4 max(|a|,|n|) + 1e-8) over a matrix; <= 1 passes.
double gradient_ratio(const Matrix &analytic, const std::function<double(Index, Index, double)> &f) {
  const double h = 1e-5;
  double worst = 0.0;
  for (Index i = 0; i < analytic.rows(); ++i)
    for (Index j = 0; j < analytic.cols(); ++j) {
      const double n = (f(i, j, h) - f(i, j, -h)) / (2 * h), a = analytic(i, j);
      worst = std::max(worst, std::abs(a - n) / (1e-4 * std::max(std::abs(a), std::abs(n)) + 1e-8));
    }
  return worst;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  int batches = 0;
  for (int b = 0; b < 20; ++b, ++batches) {
    const Matrix x = randn(4, 5, rng), w = randn(6, 5, rng);
    const auto y = random_labels(4, 6, rng);
    const auto r = softmax_loss(x, y, w);
    worst = std::max(worst, gradient_ratio(r.grad_embeddings, [&](Index i, Index j, double h) {
      Matrix p = x;
      p(i, j) += h;
      return softmax_loss(p, y, w).loss;
    }));
    worst = std::max(worst, gradient_ratio(r.grad_classifier, [&](Index i, Index j, double h) {
      Matrix p = w;
      p(i, j) += h;
      return softmax_loss(x, y, p).loss;
    }));
  }
  for (int m : {1, 2, 4})
    for (double lambda : {0.0, 5.0})
      for (int b = 0; b < 20; ++b, ++batches) {
        const Matrix x = randn(3, 4, rng) * 2.0, w = randn(5, 4, rng);
        const auto y = random_labels(3, 5, rng);
        const auto r = asoftmax_loss(x, y, w, m, lambda);
        worst = std::max(worst, gradient_ratio(r.grad_embeddings, [&](Index i, Index j, double h) {
          Matrix p = x;
          p(i, j) += h;
          return asoftmax_loss(p, y, w, m, lambda).loss;
        }));
        worst = std::max(worst, gradient_ratio(r.grad_classifier, [&](Index i, Index j, double h) {
          Matrix p = w;
          p(i, j) += h;
          return asoftmax_loss(x, y, p, m, lambda).loss;
        }));
      }
  // whole network, both losses
  for (auto loss : {LossType::softmax, LossType::asoftmax})
    for (int b = 0; b < 20; ++b, ++batches) {
      auto net = ToyEmbedNet::create(3, 5, 4, 4, Pooling::mean_std, loss, 200 + b);
      for (auto &l : net.encoder) l.b = Vector::Constant(l.b.size(), 0.1);
      const std::vector<Matrix> utts{randn(6, 3, rng), randn(4, 3, rng)};
      const auto labels = random_labels(2, 4, rng);
      auto g = net.zero_gradients();
      net.batch_loss(utts, labels, 500, &g);
      auto probe = [&](auto mutate) {
        return [&, mutate](Index i, Index j, double h) {
          ToyEmbedNet p = net;
          mutate(p, i, j, h);
          return p.batch_loss(utts, labels, 500, nullptr).loss;
        };
      };
      for (std::size_t l = 0; l < net.encoder.size(); ++l) {
        worst = std::max(worst, gradient_ratio(g.encoder[l].w, probe([l](ToyEmbedNet &p, Index i, Index j, double h) {
                                                 p.encoder[l].w(i, j) += h;
                                               })));
        worst = std::max(worst, gradient_ratio(g.encoder[l].b, probe([l](ToyEmbedNet &p, Index i, Index, double h) {
                                                 p.encoder[l].b(i) += h;
                                               })));
      }
      worst = std::max(worst, gradient_ratio(g.embed.w, probe([](ToyEmbedNet &p, Index i, Index j, double h) {
                                               p.embed.w(i, j) += h;
                                             })));
      worst = std::max(worst, gradient_ratio(g.classifier, probe([](ToyEmbedNet &p, Index i, Index j, double h) {
                                               p.classifier(i, j) += h;
                                             })));
    }
  const double t = seconds(t0);
  return {worst <= 1.0 && t < 10.0,
          fmt("%d batches, worst error %.3g of tolerance, %.1f s", batches, worst, t)};
}

// ---- 2: psi -----------------------------------------------------------

Outcome psi_shape() {
  double jump = 0.0, excess = -std::numeric_limits<double>::infinity();
  for (int m : {1, 2, 3, 4})
    for (int k = 1; k < m; ++k) {
      const double th = k * kPi / m;
      jump = std::max(jump, std::abs(asoftmax_psi_branch(th, m, k - 1) - asoftmax_psi_branch(th, m, k)));
    }
  for (int m : {2, 3, 4})
    for (int i = 0; i < 10000; ++i) {
      const double th = kPi * i / 9999.0;
      excess = std::max(excess, asoftmax_psi(th, m) - std::cos(th));
    }
  return {jump < 1e-10 && excess <= 0.0,
          fmt("max boundary jump %.2g, max psi - cos %.2g", jump, excess)};
}

// ---- 3: EM ------------------------------------------------------------

double worst_drop(const std::vector<double> &seq) {
  double d = 0.0;
  for (std::size_t i = 1; i < seq.size(); ++i) d = std::max(d, seq[i - 1] - seq[i]);
  return d;
}

Outcome em_monotone() {
  std::string detail;
  bool ok = true;
  auto record = [&](const char *name, const std::vector<double> &seq, double t) {
    const double drop = worst_drop(seq);
    const bool pass = seq.size() == 21 && drop <= 1e-8 && t < 30.0;
    ok = ok && pass;
    detail += fmt("%s%s drop %.2g (%.1f s)", detail.empty() ? "" : "; ", name, drop, t);
  };
  Rng rng(303);
  {
    Vector w = (randn(3, 1, rng).array().abs() + 0.5).matrix();
    w /= w.sum();
    std::vector<Matrix> covs;
    for (int c = 0; c < 3; ++c) covs.push_back(random_spd(3, rng, 0.5));
    GmmUbm truth(w, 3.0 * randn(3, 3, rng), covs);
    std::discrete_distribution<int> comp(w.data(), w.data() + 3);
    Matrix x(3000, 3);
    for (Index t = 0; t < x.rows(); ++t) {
      const int c = comp(rng);
      Eigen::LLT<Matrix> llt(covs[c]);
      x.row(t) = truth.means().row(c) + (Matrix(llt.matrixL()) * randn(3, 1, rng)).transpose();
    }
    UbmConfig cfg;
    cfg.components = 4;
    cfg.iterations = 20;
    const auto t0 = Clock::now();
    const auto r = ubm_train_em(x, cfg);
    record("UBM", r.log_likelihood, seconds(t0));

    std::vector<BwStats> stats;
    const Vector factor = randn(12, 1, rng);
    std::normal_distribution<double> nd;
    for (int u = 0; u < 60; ++u) {
      const double h = nd(rng);
      Matrix x_u(80, 3);
      for (Index t = 0; t < x_u.rows(); ++t) {
        const int c = comp(rng);
        Eigen::LLT<Matrix> llt(covs[c]);
        x_u.row(t) = truth.means().row(c) + h * factor.segment(3 * c, 3).transpose() +
                     (Matrix(llt.matrixL()) * randn(3, 1, rng)).transpose();
      }
      stats.push_back(accumulate_bw_stats(r.ubm, x_u));
    }
    TvConfig tc;
    tc.rank = 3;
    tc.iterations = 20;
    const auto t1 = Clock::now();
    const auto tv = train_tmatrix_em(r.ubm, stats, tc);
    record("T matrix", tv.objective, seconds(t1));
  }
  {
    const Index d = 4;
    const Matrix f = randn(d, 2, rng), sigma = random_spd(d, rng, 0.1);
    const Matrix noise = sample_gaussian(sigma, 240, rng);
    Matrix x(240, d);
    std::vector<int> labels;
    for (int s = 0; s < 60; ++s) {
      const Vector h = randn(2, 1, rng);
      for (int k = 0; k < 4; ++k) {
        x.row(4 * s + k) = (f * h).transpose() + noise.row(4 * s + k);
        labels.push_back(s);
      }
    }
    PldaConfig cfg;
    cfg.rank = 2;
    cfg.iterations = 20;
    const auto t0 = Clock::now();
    const auto r = plda_train_em(x, labels, cfg);
    record("PLDA", r.log_likelihood, seconds(t0));
  }
  return {ok, detail};
}

// ---- 4: i-vector ------------------------------------------------------

Outcome ivector_closed_form() {
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Index c = 2, d = 2, cd = 4;
    Vector w = (randn(c, 1, rng).array().abs() + 0.5).matrix();
    w /= w.sum();
    std::vector<Matrix> covs{random_spd(d, rng, 0.5), random_spd(d, rng, 0.5)};
    GmmUbm g(w, 3.0 * randn(c, d, rng), covs);
    const Matrix t = randn(cd, 2, rng);
    BwStats s{(randn(c, 1, rng).array().abs() * 5).matrix(), 3 * randn(c, d, rng), false};
    // supervector form with explicit inverses
    Matrix sigma = Matrix::Zero(cd, cd), nn = Matrix::Zero(cd, cd);
    Vector fc(cd);
    for (Index i = 0; i < c; ++i) {
      sigma.block(i * d, i * d, d, d) = covs[i];
      nn.block(i * d, i * d, d, d) = s.zero_order(i) * Matrix::Identity(d, d);
      fc.segment(i * d, d) = s.first_order.row(i).transpose() - s.zero_order(i) * g.means().row(i).transpose();
    }
    const Matrix si = sigma.fullPivLu().inverse();
    const Matrix l = Matrix::Identity(2, 2) + t.transpose() * si * nn * t;
    const Vector oracle = l.fullPivLu().inverse() * (t.transpose() * si * fc);
    const Vector got = extract_ivector(TotalVariabilityModel(g, t), s).vector;
    worst = std::max(worst, (got - oracle).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-10, fmt("10 instances, max abs difference %.2g", worst)};
}

// ---- 5: CORAL ---------------------------------------------------------

Outcome coral_residual() {
  Rng rng(505);
  double worst = 0.0;
  Index dmax = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 2 + (trial * 14) / 9;  // 2 .. 16
    dmax = std::max(dmax, d);
    const Matrix xs = sample_gaussian(random_spd(d, rng, 0.1), 10 * d, rng);
    const Matrix xt = sample_gaussian(random_spd(d, rng, 0.1), 8 * d, rng);
    const auto tr = coral_fit(xs, xt, 0.0);
    const Matrix cs = covariance(xs), ct = covariance(xt);
    worst = std::max(worst, (tr.a.transpose() * cs * tr.a - ct).norm() / ct.norm());
  }
  return {worst < 1e-6, fmt("10 instances, D up to %ld, max residual %.2g", static_cast<long>(dmax), worst)};
}

// ---- 6: AS-Norm -------------------------------------------------------

Outcome asnorm_exact() {
  Rng rng(606);
  std::normal_distribution<double> nd;
  auto draw = [&](int n) {
    std::vector<double> v(n);
    for (auto &x : v) x = nd(rng);
    return v;
  };
  CohortScoreMap ec, tc;
  ScoreSet s;
  for (int i = 0; i < 4; ++i) ec["e" + std::to_string(i)] = draw(7);
  for (int i = 0; i < 5; ++i) tc["t" + std::to_string(i)] = draw(6);
  for (int i = 0; i < 10; ++i) {
    s.trials.push_back({"e" + std::to_string(i % 4), "t" + std::to_string((i * 3) % 5)});
    s.scores.push_back(nd(rng));
  }
  const int k = 3;
  auto stats = [k](std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    v.resize(k);
    double mu = 0.0, var = 0.0;
    for (double x : v) mu += x / k;
    for (double x : v) var += (x - mu) * (x - mu) / k;
    return std::pair{mu, std::sqrt(var)};
  };
  const ScoreSet out = normalize_trial_set(s, ec, tc, k);
  double sheet = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto [me, se] = stats(ec[s.trials[i].enroll]);
    const auto [mt, st] = stats(tc[s.trials[i].test]);
    const double ref = 0.5 * ((s.scores[i] - me) / se + (s.scores[i] - mt) / st);
    sheet = std::max(sheet, std::abs(out.scores[i] - ref));
  }
  // a s + b applied to trial and cohort scores alike leaves the output unchanged
  double equiv = 0.0;
  for (auto [a, b] : {std::pair{2.5, -1.0}, std::pair{0.01, 3.0}, std::pair{40.0, 0.5}}) {
    CohortScoreMap ea = ec, ta = tc;
    ScoreSet sa = s;
    for (auto &[id, v] : ea)
      for (auto &x : v) x = a * x + b;
    for (auto &[id, v] : ta)
      for (auto &x : v) x = a * x + b;
    for (auto &x : sa.scores) x = a * x + b;
    const ScoreSet oa = normalize_trial_set(sa, ea, ta, k);
    for (int i = 0; i < 10; ++i) equiv = std::max(equiv, std::abs(oa.scores[i] - out.scores[i]));
  }
  return {sheet < 1e-12 && equiv < 1e-10,
          fmt("sheet max error %.2g, affine max change %.2g", sheet, equiv)};
}

// ---- 7: metrics -------------------------------------------------------

Outcome metric_oracles() {
  Rng rng(707);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> size(1, 100);
  const DcfParams params[] = {{0.01, 1, 1}, {0.05, 1, 1}, {0.5, 1, 1}, {0.01, 10, 1}};
  double eer_err = 0.0;
  int dcf_mismatch = 0, act_mismatch = 0, order_violations = 0;
  for (int set = 0; set < 50; ++set) {
    LabeledScores s;
    const bool coarse = set % 2 == 0;
    const double sep = 2.0 * (set % 5) / 4.0;
    auto draw = [&](double mu) {
      const double v = mu + nd(rng);
      return coarse ? std::round(v * 2.0) / 2.0 : v;
    };
    const int nt = size(rng), nn = size(rng);
    for (int i = 0; i < nt; ++i) s.target.push_back(draw(sep));
    for (int i = 0; i < nn; ++i) s.nontarget.push_back(draw(0.0));
    // every threshold, accept when score >= threshold
    std::vector<double> thr(s.target);
    thr.insert(thr.end(), s.nontarget.begin(), s.nontarget.end());
    thr.push_back(std::numeric_limits<double>::infinity());
    thr.push_back(-std::numeric_limits<double>::infinity());
    std::vector<std::pair<double, double>> ops;
    for (double t : thr) {
      double miss = 0, fa = 0;
      for (double v : s.target) miss += v < t;
      for (double v : s.nontarget) fa += v >= t;
      ops.push_back({miss / s.target.size(), fa / s.nontarget.size()});
    }
    double brute_eer = 1.0;
    for (const auto &[pma, pfa] : ops) {
      if (pma == pfa) brute_eer = std::min(brute_eer, pma);
      for (const auto &[pmb, pfb] : ops) {
        const double da = pma - pfa, db = pmb - pfb;
        if (da < 0 && db > 0) brute_eer = std::min(brute_eer, pma + da / (da - db) * (pmb - pma));
      }
    }
    eer_err = std::max(eer_err, std::abs(eer(s) - brute_eer));
    for (const auto &p : params) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto &[pm, pf] : ops) best = std::min(best, p.cost(pm, pf));
      const double m = min_dcf(s, p).cost;
      dcf_mismatch += m != best;
      const double th = p.bayes_threshold();
      double miss = 0, fa = 0;
      for (double v : s.target) miss += v < th;
      for (double v : s.nontarget) fa += v >= th;
      const double a = act_dcf(s, p);
      act_mismatch += std::abs(a - p.cost(miss / s.target.size(), fa / s.nontarget.size())) > 1e-12;
      order_violations += m > a;
    }
  }
  return {eer_err < 1e-10 && dcf_mismatch == 0 && act_mismatch == 0 && order_violations == 0,
          fmt("50 sets x 4 cost points: EER max error %.2g, minDCF mismatches %d, actDCF mismatches %d, minC > actC %d",
              eer_err, dcf_mismatch, act_mismatch, order_violations)};
}

// ---- 8: Cllr ----------------------------------------------------------

Outcome cllr_anchor() {
  LabeledScores zero{std::vector<double>(37, 0.0), std::vector<double>(113, 0.0)};
  const double c0 = cllr(zero);
  Rng rng(808);
  std::normal_distribution<double> nd;
  int increases = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int set = 0; set < 50; ++set) {
    // deliberately miscalibrated: scaled, shifted, sometimes overconfident
    const double scale = std::exp(2.0 * nd(rng)), shift = 3.0 * nd(rng), sep = std::abs(nd(rng)) * 2;
    LabeledScores s;
    for (int i = 0; i < 60; ++i) s.target.push_back(scale * (sep + nd(rng)) + shift);
    for (int i = 0; i < 200; ++i) s.nontarget.push_back(scale * nd(rng) + shift);
    const double before = cllr(s);
    const double after = cllr(apply_calibration(s, calibrate_fit(s, 0.5).params));
    increases += after > before;
    worst = std::max(worst, after - before);
  }
  return {c0 == 1.0 && increases == 0,
          fmt("all-zero Cllr %.17g; 50 sets, calibration increased Cllr %d times (max change %.3g)",
              c0, increases, worst)};
}

// ---- 9: WPE -----------------------------------------------------------

Outcome wpe_behaviour() {
  const auto t0 = Clock::now();
  int improved = 0;
  bool monotone = true;
  std::string drrs;
  for (int u = 0; u < 10; ++u) {
    Rng rng(900 + u);
    const auto spk = synth::sample_speaker(rng);
    const AudioBuffer clean = synth::synthesize_utterance(spk, 3.0, 16000, rng);
    RoomSpec room = random_room(rng, 0.3, 16000, 24);
    RoomSpec direct = room;
    direct.max_order = 0;
    AudioBuffer wet = convolve_rir(clean, ism_rir(room));
    AudioBuffer ref = convolve_rir(clean, ism_rir(direct));
    wet.samples.resize(clean.size());
    ref.samples.resize(clean.size());
    const WpeOutput out = wpe_dereverberate_traced(wet, WpeConfig{});
    const double before = projection_drr(wet.samples, ref.samples);
    const double after = projection_drr(out.audio.samples, ref.samples);
    improved += after > before;
    drrs += fmt("%s%+.2f", drrs.empty() ? "" : " ", after - before);
    for (std::size_t i = 1; i < out.objective.size(); ++i)
      monotone = monotone && out.objective[i] <= out.objective[i - 1];
  }
  const double t = seconds(t0);
  return {improved >= 9 && monotone && t < 60.0,
          fmt("DRR improved on %d/10 (dB change: %s), objective %s, %.1f s", improved, drrs.c_str(),
              monotone ? "non-increasing" : "INCREASED", t)};
}

// ---- 10: benchmark ----------------------------------------------------

LabeledScores pooled(const fs::path &out, const std::string &system) {
  LabeledScores all;
  for (const char *split : {"dev", "eval"}) {
    const auto s = label_scores(read_scores((out / "systems" / system / (std::string(split) + ".scores")).string()),
                                read_trials((out / "data" / (std::string(split) + ".key")).string()));
    all.target.insert(all.target.end(), s.target.begin(), s.target.end());
    all.nontarget.insert(all.nontarget.end(), s.nontarget.begin(), s.nontarget.end());
  }
  return all;
}

Outcome benchmark() {
  const fs::path out = scratch("benchmark");
  ExperimentConfig cfg;  // reference configuration
  cfg.output_dir = out.string();
  cfg.cache_dir = (out / "cache").string();
  ::unsetenv("FSV_CACHE_DIR");
  const auto t0 = Clock::now();
  run_pipeline(cfg);
  const double t = seconds(t0);
  std::map<std::string, double> e;
  for (const char *s : {"ivector", "ivector-wpe", "softmax", "softmax-wpe", "asoftmax", "asoftmax-wpe"})
    e[s] = eer(pooled(out, s));
  const bool wpe_iv = e["ivector-wpe"] <= e["ivector"];
  const bool wpe_nn = e["asoftmax-wpe"] <= e["asoftmax"] && e["softmax-wpe"] <= e["softmax"];
  const bool margin = e["asoftmax"] <= e["softmax"] && e["asoftmax-wpe"] <= e["softmax-wpe"];
  return {wpe_iv && wpe_nn && margin && t < 600.0,
          fmt("pooled dev+eval EER%%: ivector %.2f / wpe %.2f, softmax %.2f / wpe %.2f, "
              "asoftmax %.2f / wpe %.2f; WPE ok: ivector %s, neural %s; asoftmax <= softmax %s; %.0f s",
              100 * e["ivector"], 100 * e["ivector-wpe"], 100 * e["softmax"], 100 * e["softmax-wpe"],
              100 * e["asoftmax"], 100 * e["asoftmax-wpe"], wpe_iv ? "yes" : "NO", wpe_nn ? "yes" : "NO",
              margin ? "yes" : "NO", t)};
}

// ---- 11: fusion -------------------------------------------------------

Outcome fusion_sanity() {
  Rng rng(1111);
  std::normal_distribution<double> nd;
  ScoreSet a, b;
  TrialList key;
  for (int i = 0; i < 2000; ++i) {
    const bool tgt = i % 10 == 0;
    const Trial t{"e" + std::to_string(i), "t" + std::to_string(i)};
    key.trials.push_back(t);
    key.labels.push_back(tgt ? TrialLabel::target : TrialLabel::impostor);
    a.trials.push_back(t);
    b.trials.push_back(t);
    // independent noise; different scales and offsets
    a.scores.push_back(3.0 * ((tgt ? 2.0 : 0.0) + nd(rng)) - 4.0);
    b.scores.push_back(0.2 * ((tgt ? 1.8 : 0.0) + nd(rng)) + 1.0);
  }
  const double prior = 0.5;
  const auto la = label_scores(a, key), lb = label_scores(b, key);
  const auto pa = calibrate_fit(la, prior).params, pb = calibrate_fit(lb, prior).params;
  const double ca = cllr(apply_calibration(la, pa)), cb = cllr(apply_calibration(lb, pb));
  const double cf = cllr(label_scores(fuse({a, b}, {pa, pb}), key));
  return {cf <= std::min(ca, cb),
          fmt("calibrated Cllr %.4f and %.4f, fused %.4f", ca, cb, cf)};
}

// ---- 12: determinism --------------------------------------------------

ExperimentConfig small_config(const fs::path &out, unsigned threads) {
  ExperimentConfig cfg;
  cfg.output_dir = out.string();
  cfg.cache_dir = (out / "cache").string();
  cfg.threads = threads;
  auto &g = cfg.data.generate;
  g.speakers = 14;
  g.train_speakers = 10;
  g.dev_speakers = 2;
  g.eval_speakers = 2;
  g.train_utterances = 3;
  g.adapt_utterances = 2;
  g.trial_utterances = 4;
  g.seconds = 1.5;
  g.max_order = 12;
  cfg.ivector.ubm.components = 4;
  cfg.ivector.ubm.iterations = 3;
  cfg.ivector.tv.rank = 8;
  cfg.ivector.tv.iterations = 2;
  cfg.embedder.train.steps = 60;
  cfg.asnorm.top_x = 4;
  cfg.backend.coral = false;
  return cfg;
}

Outcome determinism() {
  const fs::path a = scratch("determinism_a"), b = scratch("determinism_b");
  ::unsetenv("FSV_CACHE_DIR");
  run_pipeline(small_config(a, 1));
  run_pipeline(small_config(b, 3));
  std::vector<fs::path> files;
  for (const auto &e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    if (*rel.begin() == "cache" || *rel.begin() == "data") continue;
    files.push_back(rel);
  }
  int scores = 0, reports = 0, differ = 0;
  for (const auto &f : files) {
    scores += f.extension() == ".scores";
    reports += f.stem() == "report";
    differ += !fs::exists(b / f) || slurp(a / f) != slurp(b / f);
  }
  return {differ == 0 && scores > 0 && reports == 2,
          fmt("%zu output files (%d score files, %d reports), %d differ; runs used 1 and 3 threads",
              files.size(), scores, reports, differ)};
}

}  // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<const char *, Outcome (*)()>> criteria = {
      {"analytic gradients match finite differences", gradients},
      {"psi continuous and below cos", psi_shape},
      {"UBM, T-matrix and PLDA EM non-decreasing", em_monotone},
      {"i-vector matches brute-force formula", ivector_closed_form},
      {"CORAL covariance residual", coral_residual},
      {"AS-Norm sheet and affine equivariance", asnorm_exact},
      {"metrics match brute-force sweeps", metric_oracles},
      {"Cllr anchor and calibration", cllr_anchor},
      {"WPE improves DRR, objective non-increasing", wpe_behaviour},
      {"far-field benchmark: WPE and A-softmax direction", benchmark},
      {"fusion beats single calibrated systems", fusion_sanity},
      {"byte-identical reruns", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << n << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
