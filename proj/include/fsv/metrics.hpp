// fsv/metrics.hpp

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

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fsv/common.hpp"
#include "fsv/trials.hpp"

namespace fsv {

/// Detection cost operating point.
struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void validate() const {
    require(p_target > 0.0 && p_target < 1.0, "p_target must lie in (0, 1)");
    require(c_miss > 0.0 && c_fa > 0.0, "detection costs must be positive");
  }
  /// Bayes threshold for LLR scores.
  double bayes_threshold() const {
    return std::log((1.0 - p_target) * c_fa / (p_target * c_miss));
  }
  double normalizer() const {
    return std::min(p_target * c_miss, (1.0 - p_target) * c_fa);
  }
  double cost(double p_miss, double p_fa) const {
    return (p_target * c_miss * p_miss + (1.0 - p_target) * c_fa * p_fa) / normalizer();
  }
};

struct DetPoint {
  double p_fa = 0.0;
  double p_miss = 0.0;
  double threshold = 0.0;  // accept when score >= threshold
};

struct DcfResult {
  double cost = 0.0;
  double threshold = 0.0;
};

namespace detail {

/// Operating points for every distinct threshold, from accept-all to reject-all.
inline std::vector<DetPoint> sweep(const LabeledScores &s) {
  std::vector<std::pair<double, bool>> all;
  all.reserve(s.target.size() + s.nontarget.size());
  for (double v : s.target) all.emplace_back(v, true);
  for (double v : s.nontarget) all.emplace_back(v, false);
  std::sort(all.begin(), all.end(),
            [](const auto &x, const auto &y) { return x.first < y.first; });
  const double nt = static_cast<double>(s.target.size());
  const double nn = static_cast<double>(s.nontarget.size());
  std::vector<DetPoint> out;
  out.reserve(all.size() + 1);
  std::size_t miss = 0, fa = s.nontarget.size();
  for (std::size_t i = 0; i < all.size();) {
    const double thr = all[i].first;
    out.push_back({fa / nn, miss / nt, thr});
    while (i < all.size() && all[i].first == thr) {
      if (all[i].second) ++miss;
      else --fa;
      ++i;
    }
  }
  out.push_back({fa / nn, miss / nt, std::numeric_limits<double>::infinity()});
  return out;
}

inline void check_finite(const LabeledScores &s, const std::string &what) {
  for (double v : s.target)
    if (std::isnan(v)) throw DegenerateError(what + ": NaN score");
  for (double v : s.nontarget)
    if (std::isnan(v)) throw DegenerateError(what + ": NaN score");
}

/// Pool-adjacent-violators on 0/1 labels sorted by score; returns block widths.
inline std::vector<std::size_t> pav_widths(const std::vector<double> &y) {
  std::vector<double> sum;
  std::vector<std::size_t> width;
  for (double v : y) {
    sum.push_back(v);
    width.push_back(1);
    while (sum.size() > 1 &&
           sum[sum.size() - 2] / width[width.size() - 2] >= sum.back() / width.back()) {
      sum[sum.size() - 2] += sum.back();
      width[width.size() - 2] += width.back();
      sum.pop_back();
      width.pop_back();
    }
  }
  return width;
}

inline double crossing(double pm0, double pf0, double pm1, double pf1) {
  const double d0 = pm0 - pf0, d1 = pm1 - pf1;
  if (d0 == d1) return std::min(pm0, pm1);
  const double t = d0 / (d0 - d1);
  return pm0 + t * (pm1 - pm0);
}

/// EER of a convex ROC polyline ordered from (pm=0, pf=1) to (pm=1, pf=0).
inline double hull_eer(const std::vector<std::pair<double, double>> &pm_pf) {
  for (std::size_t i = 0; i + 1 < pm_pf.size(); ++i) {
    auto [pm0, pf0] = pm_pf[i];
    auto [pm1, pf1] = pm_pf[i + 1];
    if (pm0 - pf0 <= 0.0 && pm1 - pf1 >= 0.0) return crossing(pm0, pf0, pm1, pf1);
  }
  return 0.0;
}

}  // namespace detail

/// Equal error rate on the ROC convex hull (linear interpolation between
/// hull vertices).
inline double eer(const LabeledScores &s) {
  s.require_both("eer");
  detail::check_finite(s, "eer");
  std::vector<std::pair<double, double>> all;
  for (double v : s.target) all.emplace_back(v, 1.0);
  for (double v : s.nontarget) all.emplace_back(v, 0.0);
  // ties: target first, so PAV pools them
  std::sort(all.begin(), all.end(), [](const auto &x, const auto &y) {
    return x.first < y.first || (x.first == y.first && x.second > y.second);
  });
  std::vector<double> ideal;
  for (const auto &p : all) ideal.push_back(p.second);
  const auto width = detail::pav_widths(ideal);
  const double nt = static_cast<double>(s.target.size());
  const double nn = static_cast<double>(s.nontarget.size());
  std::vector<std::pair<double, double>> hull;
  double miss = 0.0, fa = nn;
  std::size_t left = 0;
  hull.emplace_back(0.0, 1.0);
  for (std::size_t w : width) {
    for (std::size_t k = left; k < left + w; ++k) {
      if (ideal[k] > 0.5) miss += 1.0;
      else fa -= 1.0;
    }
    left += w;
    hull.emplace_back(miss / nt, fa / nn);
  }
  return detail::hull_eer(hull);
}

/// EER from arbitrary operating points, via their lower-left convex hull.
inline double eer_from_points(std::vector<DetPoint> pts) {
  if (pts.empty()) throw DegenerateError("eer_from_points: no points");
  pts.push_back({1.0, 0.0, 0.0});
  pts.push_back({0.0, 1.0, 0.0});
  // monotone chain in (p_fa, p_miss), lower hull
  std::sort(pts.begin(), pts.end(), [](const DetPoint &a, const DetPoint &b) {
    return a.p_fa < b.p_fa || (a.p_fa == b.p_fa && a.p_miss < b.p_miss);
  });
  std::vector<DetPoint> h;
  for (const auto &p : pts) {
    while (h.size() >= 2) {
      const auto &a = h[h.size() - 2], &b = h.back();
      const double cr = (b.p_fa - a.p_fa) * (p.p_miss - a.p_miss) -
                        (b.p_miss - a.p_miss) * (p.p_fa - a.p_fa);
      if (cr <= 0.0) h.pop_back();
      else break;
    }
    h.push_back(p);
  }
  // h runs from low p_fa to high p_fa; reorder to the hull_eer convention
  std::vector<std::pair<double, double>> pm_pf;
  for (auto it = h.rbegin(); it != h.rend(); ++it) pm_pf.emplace_back(it->p_miss, it->p_fa);
  return detail::hull_eer(pm_pf);
}

/// Minimum normalized DCF over all distinct thresholds and +-inf.
inline DcfResult min_dcf(const LabeledScores &s, const DcfParams &p = {}) {
  s.require_both("min_dcf");
  p.validate();
  detail::check_finite(s, "min_dcf");
  DcfResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto &pt : detail::sweep(s)) {
    const double c = p.cost(pt.p_miss, pt.p_fa);
    if (c < best.cost) best = {c, pt.threshold};
  }
  return best;
}

/// Normalized DCF with decisions taken at the Bayes threshold.
inline double act_dcf(const LabeledScores &s, const DcfParams &p = {}) {
  s.require_both("act_dcf");
  p.validate();
  detail::check_finite(s, "act_dcf");
  const double t = p.bayes_threshold();
  double miss = 0.0, fa = 0.0;
  for (double v : s.target) miss += v < t ? 1.0 : 0.0;
  for (double v : s.nontarget) fa += v >= t ? 1.0 : 0.0;
  return p.cost(miss / static_cast<double>(s.target.size()),
                fa / static_cast<double>(s.nontarget.size()));
}

/// Full operating-point staircase from accept-all (p_fa = 1) to reject-all.
inline std::vector<DetPoint> det_points(const LabeledScores &s) {
  s.require_both("det_points");
  detail::check_finite(s, "det_points");
  return detail::sweep(s);
}

/// Standard normal quantile.
inline double probit(double p) {
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
}

struct MetricReport {
  double min_c = 0.0;
  double act_c = 0.0;
  double eer = 0.0;
  double cllr = 0.0;
};

struct DetCurve {
  std::string label;
  std::vector<DetPoint> points;
};

/// Tab separated: p_fa p_miss probit(p_fa) probit(p_miss).
inline void write_det_table(std::ostream &os, const std::vector<DetPoint> &pts) {
  os << "# p_fa\tp_miss\tprobit_fa\tprobit_miss\n";
  os << std::setprecision(10);
  for (const auto &p : pts)
    os << p.p_fa << '\t' << p.p_miss << '\t' << probit(p.p_fa) << '\t' << probit(p.p_miss) << '\n';
}

namespace detail {

inline std::string xml_escape(const std::string &in) {
  std::string out;
  for (char ch : in) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace detail

/// DET plot with probit-scaled axes (0.1% .. 60%).
inline void write_det_svg(std::ostream &os, const std::vector<DetCurve> &curves,
                          const std::string &title = "DET") {
  constexpr double kSize = 480.0, kMargin = 60.0;
  const double lo = probit(0.001), hi = probit(0.6);
  auto coord = [&](double p) {
    return (std::clamp(probit(p), lo, hi) - lo) / (hi - lo) * kSize;
  };
  static const char *kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  const double w = kSize + 2 * kMargin;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << w
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << detail::xml_escape(title)
     << "</text>\n";
  os << "<g transform=\"translate(" << kMargin << "," << kMargin << ")\">\n";
  os << "<rect width=\"" << kSize << "\" height=\"" << kSize
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  static const std::pair<double, const char *> kTicks[] = {
      {0.001, "0.1"}, {0.002, "0.2"}, {0.005, "0.5"}, {0.01, "1"}, {0.02, "2"},
      {0.05, "5"},    {0.1, "10"},    {0.2, "20"},    {0.4, "40"}, {0.6, "60"}};
  for (const auto &[t, txt] : kTicks) {
    const double x = coord(t), y = kSize - coord(t);
    os << "<line x1=\"" << x << "\" y1=\"0\" x2=\"" << x << "\" y2=\"" << kSize
       << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"0\" y1=\"" << y << "\" x2=\"" << kSize << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << x << "\" y=\"" << kSize + 14 << "\" text-anchor=\"middle\">" << txt
       << "</text>\n";
    os << "<text x=\"-6\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << txt << "</text>\n";
  }
  os << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize + 34
     << "\" text-anchor=\"middle\">False alarm rate [%]</text>\n";
  os << "<text transform=\"translate(-40," << kSize / 2
     << ") rotate(-90)\" text-anchor=\"middle\">Miss rate [%]</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char *col = kColors[c % 8];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (const auto &p : curves[c].points) os << coord(p.p_fa) << ',' << kSize - coord(p.p_miss) << ' ';
    os << "\"/>\n";
    const double ly = 14.0 + 14.0 * static_cast<double>(c);
    os << "<line x1=\"" << kSize - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kSize - 130
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kSize - 125 << "\" y=\"" << ly << "\">" << detail::xml_escape(curves[c].label) << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  os.unsetf(std::ios::floatfield);
}

inline void write_det_svg(const std::string &path, const std::vector<DetCurve> &curves,
                          const std::string &title = "DET") {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path);
  write_det_svg(os, curves, title);
}

}  // namespace fsv
