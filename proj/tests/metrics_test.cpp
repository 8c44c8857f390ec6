// tests/metrics_test.cpp

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

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>

#include "fsv/metrics.hpp"

namespace fsv {
namespace {

LabeledScores random_set(Rng &rng, int nt, int nn, double sep, bool coarse) {
  std::normal_distribution<double> nd(0.0, 1.0);
  LabeledScores s;
  auto draw = [&](double mu) {
    double v = mu + nd(rng);
    return coarse ? std::round(v * 2.0) / 2.0 : v;  // coarse grid forces ties
  };
  for (int i = 0; i < nt; ++i) s.target.push_back(draw(sep));
  for (int i = 0; i < nn; ++i) s.nontarget.push_back(draw(0.0));
  return s;
}

struct Op {
  double pm, pf;
};

std::vector<Op> brute_points(const LabeledScores &s) {
  std::vector<double> thr(s.target);
  thr.insert(thr.end(), s.nontarget.begin(), s.nontarget.end());
  thr.push_back(std::numeric_limits<double>::infinity());
  thr.push_back(-std::numeric_limits<double>::infinity());
  std::vector<Op> out;
  for (double t : thr) {
    double miss = 0, fa = 0;
    for (double v : s.target) miss += v < t;
    for (double v : s.nontarget) fa += v >= t;
    out.push_back({miss / s.target.size(), fa / s.nontarget.size()});
  }
  return out;
}

double brute_min_dcf(const LabeledScores &s, const DcfParams &p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto &o : brute_points(s)) {
    double c = (p.p_target * p.c_miss * o.pm + (1 - p.p_target) * p.c_fa * o.pf) /
               std::min(p.p_target * p.c_miss, (1 - p.p_target) * p.c_fa);
    best = std::min(best, c);
  }
  return best;
}

// lowest point where any chord between two operating points meets pm == pf
double brute_eer(const LabeledScores &s) {
  auto pts = brute_points(s);
  double best = 1.0;
  for (const auto &a : pts) {
    if (a.pm == a.pf) best = std::min(best, a.pm);
    for (const auto &b : pts) {
      double da = a.pm - a.pf, db = b.pm - b.pf;
      if (da < 0 && db > 0) {
        double t = da / (da - db);
        best = std::min(best, a.pm + t * (b.pm - a.pm));
      }
    }
  }
  return best;
}

TEST(Eer, HandExample) {
  LabeledScores s{{2.0, 3.0}, {1.0, 2.5}};
  EXPECT_NEAR(eer(s), 0.25, 1e-15);
  EXPECT_NEAR(brute_eer(s), 0.25, 1e-15);
}

TEST(Eer, PerfectSeparationIsZero) {
  LabeledScores s{{3.0, 4.0, 5.0}, {-1.0, 0.0, 1.0, 2.9}};
  EXPECT_EQ(eer(s), 0.0);
  EXPECT_EQ(min_dcf(s).cost, 0.0);
}

TEST(Eer, FullyInvertedHullIsChance) {
  LabeledScores s{{-1.0, -2.0}, {1.0, 2.0}};
  EXPECT_NEAR(eer(s), 0.5, 1e-15);
  EXPECT_NEAR(brute_eer(s), 0.5, 1e-15);
}

TEST(Eer, SameDistributionNearHalf) {
  Rng rng(3);
  auto s = random_set(rng, 5000, 5000, 0.0, false);
  EXPECT_NEAR(eer(s), 0.5, 0.05);
}

TEST(Eer, MatchesBruteForceOnRandomSets) {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    int nt = 3 + static_cast<int>(rng() % 20), nn = 3 + static_cast<int>(rng() % 40);
    auto s = random_set(rng, nt, nn, 1.0, rep % 2 == 0);
    EXPECT_NEAR(eer(s), brute_eer(s), 1e-10) << "rep " << rep;
  }
}

TEST(Eer, AllTiedIsHalf) {
  LabeledScores s{{1.0, 1.0, 1.0}, {1.0, 1.0}};
  EXPECT_NEAR(eer(s), 0.5, 1e-15);
}

TEST(MinDcf, MatchesBruteForce) {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    auto s = random_set(rng, 10, 40, 1.5, rep % 3 == 0);
    for (DcfParams p : {DcfParams{}, DcfParams{0.5, 1, 1}, DcfParams{0.05, 2.0, 0.5}})
      EXPECT_NEAR(min_dcf(s, p).cost, brute_min_dcf(s, p), 1e-12) << "rep " << rep;
  }
}

TEST(MinDcf, ThresholdReproducesCost) {
  Rng rng(6);
  auto s = random_set(rng, 30, 200, 2.0, false);
  DcfParams p;
  auto r = min_dcf(s, p);
  double miss = 0, fa = 0;
  for (double v : s.target) miss += v < r.threshold;
  for (double v : s.nontarget) fa += v >= r.threshold;
  EXPECT_NEAR(p.cost(miss / 30.0, fa / 200.0), r.cost, 1e-12);
}

TEST(MinDcf, AllEqualScoresBoundedByOne) {
  LabeledScores s{{0.3, 0.3}, {0.3, 0.3, 0.3}};
  auto r = min_dcf(s);
  EXPECT_LE(r.cost, 1.0);
  EXPECT_NEAR(r.cost, 1.0, 1e-15);
  EXPECT_TRUE(std::isinf(r.threshold));
}

TEST(ActDcf, AllZeroScoresRejectEverything) {
  LabeledScores s{{0.0, 0.0, 0.0}, {0.0, 0.0}};
  EXPECT_NEAR(act_dcf(s), 1.0, 1e-15);
}

TEST(ActDcf, RawCosineScoresNearOne) {
  Rng rng(8);
  std::normal_distribution<double> nd(0.0, 0.15);
  LabeledScores s;
  for (int i = 0; i < 500; ++i) s.target.push_back(std::clamp(0.6 + nd(rng), -1.0, 1.0));
  for (int i = 0; i < 5000; ++i) s.nontarget.push_back(std::clamp(nd(rng), -1.0, 1.0));
  EXPECT_GE(act_dcf(s), 0.9);
  EXPECT_LT(min_dcf(s).cost, 0.5);
}

TEST(ActDcf, CalibratedGaussianLlrsCloseToMin) {
  Rng rng(9);
  const double mu = 3.0;
  std::normal_distribution<double> tgt(mu, std::sqrt(2 * mu)), non(-mu, std::sqrt(2 * mu));
  LabeledScores s;
  for (int i = 0; i < 20000; ++i) s.target.push_back(tgt(rng));
  for (int i = 0; i < 200000; ++i) s.nontarget.push_back(non(rng));
  double mc = min_dcf(s).cost, ac = act_dcf(s);
  EXPECT_LE(mc, ac);
  EXPECT_LE(ac, 1.1 * mc);
}

TEST(Metrics, MinNeverExceedsAct) {
  Rng rng(12);
  std::uniform_real_distribution<double> up(0.001, 0.999), uc(0.1, 10.0), us(-5.0, 5.0);
  for (int rep = 0; rep < 200; ++rep) {
    auto s = random_set(rng, 5 + rep % 17, 9 + rep % 31, us(rng), rep % 2 == 0);
    for (auto &v : s.target) v = v * 3 + us(rng) * 0.1;
    DcfParams p{up(rng), uc(rng), uc(rng)};
    EXPECT_LE(min_dcf(s, p).cost, act_dcf(s, p) + 1e-15);
  }
}

TEST(Metrics, InvariantUnderIncreasingAffineMap) {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    auto s = random_set(rng, 40, 300, 1.5, rep % 2 == 1);
    LabeledScores t = s;
    for (auto &v : t.target) v = 2 * v + 3;
    for (auto &v : t.nontarget) v = 2 * v + 3;
    EXPECT_NEAR(eer(s), eer(t), 1e-12);
    EXPECT_NEAR(min_dcf(s).cost, min_dcf(t).cost, 1e-12);
  }
}

TEST(Metrics, ActDcfIsNotInvariant) {
  // LLR 4 sits below log(99); after 2s+3 it lands above it
  LabeledScores s{{4.0, 4.0}, {-3.0, -3.0}};
  LabeledScores t{{11.0, 11.0}, {-3.0, -3.0}};
  EXPECT_NEAR(act_dcf(s), 1.0, 1e-15);
  EXPECT_NEAR(act_dcf(t), 0.0, 1e-15);
  EXPECT_EQ(min_dcf(s).cost, min_dcf(t).cost);
}

TEST(Metrics, IndependentOfTrialOrder) {
  Rng rng(14);
  auto s = random_set(rng, 50, 100, 1.0, true);
  LabeledScores t = s;
  std::shuffle(t.target.begin(), t.target.end(), rng);
  std::shuffle(t.nontarget.begin(), t.nontarget.end(), rng);
  EXPECT_EQ(eer(s), eer(t));
  EXPECT_EQ(min_dcf(s).cost, min_dcf(t).cost);
  EXPECT_EQ(act_dcf(s), act_dcf(t));
}

TEST(Metrics, MissingClassThrows) {
  LabeledScores only_tgt{{1.0}, {}};
  LabeledScores only_non{{}, {1.0}};
  EXPECT_THROW(eer(only_tgt), DegenerateError);
  EXPECT_THROW(min_dcf(only_non), DegenerateError);
  EXPECT_THROW(act_dcf(only_tgt), DegenerateError);
  EXPECT_THROW(det_points(only_non), DegenerateError);
  EXPECT_THROW(min_dcf({{1.0}, {0.0}}, DcfParams{1.0, 1, 1}), ConfigError);
}

TEST(Det, TwoTrialStaircase) {
  auto pts = det_points({{1.0}, {0.0}});
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].p_fa, 1.0);
  EXPECT_EQ(pts[0].p_miss, 0.0);
  EXPECT_EQ(pts[1].p_fa, 0.0);
  EXPECT_EQ(pts[1].p_miss, 0.0);
  EXPECT_EQ(pts[2].p_fa, 0.0);
  EXPECT_EQ(pts[2].p_miss, 1.0);
}

TEST(Det, MonotoneStaircase) {
  Rng rng(15);
  auto s = random_set(rng, 60, 90, 1.0, true);
  auto pts = det_points(s);
  EXPECT_EQ(pts.front().p_fa, 1.0);
  EXPECT_EQ(pts.back().p_miss, 1.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_LE(pts[i].p_fa, pts[i - 1].p_fa);
    EXPECT_GE(pts[i].p_miss, pts[i - 1].p_miss);
    EXPECT_GT(pts[i].threshold, pts[i - 1].threshold);
  }
}

TEST(Det, EerFromPointsMatches) {
  Rng rng(16);
  for (int rep = 0; rep < 50; ++rep) {
    auto s = random_set(rng, 5 + rep, 7 + 2 * rep, 1.2, rep % 2 == 0);
    EXPECT_NEAR(eer_from_points(det_points(s)), eer(s), 1e-10) << "rep " << rep;
  }
}

TEST(Det, ProbitAndSvg) {
  EXPECT_NEAR(probit(0.5), 0.0, 1e-15);
  EXPECT_NEAR(probit(0.8413447460685429), 1.0, 1e-9);
  EXPECT_NEAR(probit(0.01), -2.3263478740408408, 1e-9);
  Rng rng(17);
  auto s = random_set(rng, 20, 50, 1.0, false);
  std::ostringstream os;
  write_det_svg(os, {{"sys <a>", det_points(s)}}, "dev & eval");
  const std::string svg = os.str();
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("sys &lt;a&gt;"), std::string::npos);
  EXPECT_NE(svg.find("dev &amp; eval"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::ostringstream tab;
  write_det_table(tab, det_points(s));
  EXPECT_NE(tab.str().find("probit_fa"), std::string::npos);
}

}  // namespace
}  // namespace fsv
