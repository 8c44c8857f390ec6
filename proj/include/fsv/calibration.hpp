// fsv/calibration.hpp

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

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "fsv/common.hpp"
#include "fsv/trials.hpp"

namespace fsv {

/// Cllr in bits; scores are taken as natural-log LLRs.
inline double cllr(const LabeledScores &s) {
  s.require_both("cllr");
  double tgt = 0.0, non = 0.0;  // bits
  for (double v : s.target) tgt += softplus(-v) / std::numbers::ln2;
  for (double v : s.nontarget) non += softplus(v) / std::numbers::ln2;
  tgt /= static_cast<double>(s.target.size());
  non /= static_cast<double>(s.nontarget.size());
  return 0.5 * (tgt + non);
}

/// Affine score map s -> a*s + b with a > 0.
struct CalibrationParams {
  double a = 1.0;
  double b = 0.0;

  double operator()(double s) const { return a * s + b; }
  void validate() const {
    require(std::isfinite(a) && std::isfinite(b), "calibration: non-finite parameters");
    require(a > 0.0, "calibration: scale must be positive");
  }
};

inline LabeledScores apply_calibration(const LabeledScores &s, const CalibrationParams &p) {
  LabeledScores out;
  for (double v : s.target) out.target.push_back(p(v));
  for (double v : s.nontarget) out.nontarget.push_back(p(v));
  return out;
}

inline ScoreSet apply_calibration(const ScoreSet &s, const CalibrationParams &p) {
  ScoreSet out = s;
  for (auto &v : out.scores) v = p(v);
  return out;
}

struct CalibrationOptions {
  double min_scale = 1e-6;
  double max_scale = 1e3;
  int max_iterations = 200;
  double tolerance = 1e-8;  // gradient norm
};

struct CalibrationFit {
  CalibrationParams params;
  double objective = 0.0;      // prior-weighted logistic loss, nats
  double gradient_norm = 0.0;  // unconstrained gradient at the solution
  int iterations = 0;
  bool capped = false;      // separable data: scale hit max_scale
  bool degenerate = false;  // optimum wants a <= 0
};

namespace detail {

class LogisticObjective {
 public:
  LogisticObjective(const LabeledScores &s, double prior)
      : s_(s),
        wt_(prior / static_cast<double>(s.target.size())),
        wn_((1.0 - prior) / static_cast<double>(s.nontarget.size())),
        offset_(std::log(prior / (1.0 - prior))) {}

  double value(double a, double b) const {
    double f = 0.0;
    for (double v : s_.target) f += wt_ * softplus(-(a * v + b + offset_));
    for (double v : s_.nontarget) f += wn_ * softplus(a * v + b + offset_);
    return f;
  }

  void derivatives(double a, double b, Eigen::Vector2d &g, Eigen::Matrix2d &h) const {
    g.setZero();
    h.setZero();
    auto add = [&](double v, double w, double resid) {
      // resid = sigmoid(z) - label
      const double z = a * v + b + offset_;
      const double sg = 1.0 / (1.0 + std::exp(-z));
      const double r = sg - resid;
      const double c = w * sg * (1.0 - sg);
      g += w * r * Eigen::Vector2d(v, 1.0);
      h(0, 0) += c * v * v;
      h(0, 1) += c * v;
      h(1, 1) += c;
    };
    for (double v : s_.target) add(v, wt_, 1.0);
    for (double v : s_.nontarget) add(v, wn_, 0.0);
    h(1, 0) = h(0, 1);
  }

 private:
  const LabeledScores &s_;
  double wt_, wn_, offset_;
};

/// Best bias for a fixed scale: bisection on the (increasing) derivative.
inline double best_bias(const LogisticObjective &obj, double a, double b0) {
  Eigen::Vector2d g;
  Eigen::Matrix2d h;
  auto slope = [&](double b) {
    obj.derivatives(a, b, g, h);
    return g(1);
  };
  const double g0 = slope(b0);
  if (g0 == 0.0) return b0;
  double step = std::max(1.0, std::abs(b0)), lo = b0, hi = b0;
  for (int it = 0; it < 2000; ++it, step *= 2.0) {
    if (g0 > 0) {
      lo = b0 - step;
      if (slope(lo) <= 0) break;
      hi = lo;
    } else {
      hi = b0 + step;
      if (slope(hi) >= 0) break;
      lo = hi;
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0 ? hi : lo) = mid;
  }
  return obj.value(a, lo) <= obj.value(a, hi) ? lo : hi;
}

}  // namespace detail

/// Fits (a, b) by damped Newton on the prior-weighted logistic loss.
/// The scale is kept in [min_scale, max_scale]; hitting either end is flagged.
inline CalibrationFit calibrate_fit(const LabeledScores &s, double prior,
                                    const CalibrationOptions &opt = {}) {
  s.require_both("calibrate_fit");
  require(prior > 0.0 && prior < 1.0, "calibration prior must lie in (0, 1)");
  require(opt.min_scale > 0.0 && opt.max_scale >= opt.min_scale, "calibration: bad scale bounds");
  for (double v : s.target)
    if (!std::isfinite(v)) throw DegenerateError("calibrate_fit: non-finite score");
  for (double v : s.nontarget)
    if (!std::isfinite(v)) throw DegenerateError("calibrate_fit: non-finite score");

  detail::LogisticObjective obj(s, prior);
  Eigen::Vector2d x(1.0, 0.0), g;
  Eigen::Matrix2d h;
  CalibrationFit fit;
  bool converged = false;
  const auto [tmin, tmax] = std::minmax_element(s.target.begin(), s.target.end());
  const auto [nmin, nmax] = std::minmax_element(s.nontarget.begin(), s.nontarget.end());
  // separable either way round: no finite optimum
  const bool separable = *nmax <= *tmin || *tmax <= *nmin;
  for (int it = 0; it < opt.max_iterations && !separable; ++it) {
    obj.derivatives(x(0), x(1), g, h);
    fit.iterations = it;
    if (g.norm() < opt.tolerance) {
      converged = true;
      break;
    }
    Eigen::Vector2d step;
    Eigen::LDLT<Eigen::Matrix2d> ldlt(h + 1e-12 * Eigen::Matrix2d::Identity());
    step = ldlt.solve(-g);
    if (!step.allFinite() || step.dot(g) >= 0.0) step = -g;
    const double f0 = obj.value(x(0), x(1));
    double t = 1.0;
    while (t > 1e-14 && obj.value(x(0) + t * step(0), x(1) + t * step(1)) > f0 + 1e-4 * t * step.dot(g))
      t *= 0.5;
    if (t <= 1e-14) {
      converged = g.norm() < 1e3 * opt.tolerance;
      break;
    }
    x += t * step;
    if (x(0) > opt.max_scale) break;
  }

  if (converged && x(0) >= opt.min_scale && x(0) <= opt.max_scale) {
    fit.params = {x(0), x(1)};
  } else if (separable) {
    // loss is monotone in a: larger is better in the right order, smaller when flipped
    if (*tmax <= *nmin) {
      fit.params = {opt.min_scale, detail::best_bias(obj, opt.min_scale, 0.0)};
      fit.degenerate = true;
    } else {
      fit.params = {opt.max_scale, detail::best_bias(obj, opt.max_scale, 0.0)};
      fit.capped = true;
    }
  } else {
    // min over b is convex in a: golden section on log a inside the box
    double lo = std::log(opt.min_scale), hi = std::log(opt.max_scale);
    double b_guess = x.allFinite() ? x(1) : 0.0;
    auto profile = [&](double la, double &b) {
      b = detail::best_bias(obj, std::exp(la), b_guess);
      return obj.value(std::exp(la), b);
    };
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo), b1 = 0.0, b2 = 0.0;
    double f1 = profile(x1, b1), f2 = profile(x2, b2);
    while (hi - lo > 1e-10) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1, f2 = f1, b2 = b1;
        x1 = hi - r * (hi - lo);
        f1 = profile(x1, b1);
      } else {
        lo = x1;
        x1 = x2, f1 = f2, b1 = b2;
        x2 = lo + r * (hi - lo);
        f2 = profile(x2, b2);
      }
    }
    double best_la = f1 <= f2 ? x1 : x2, best_b = f1 <= f2 ? b1 : b2, best_f = std::min(f1, f2);
    for (double la : {std::log(opt.min_scale), std::log(opt.max_scale)}) {
      double b = 0.0;
      const double f = profile(la, b);
      if (f < best_f) best_la = la, best_b = b, best_f = f;
    }
    fit.params = {std::exp(best_la), best_b};
    if (best_la - std::log(opt.min_scale) < 1e-6) {
      fit.params = {opt.min_scale, detail::best_bias(obj, opt.min_scale, best_b)};
      fit.degenerate = true;
    } else if (std::log(opt.max_scale) - best_la < 1e-6) {
      fit.params = {opt.max_scale, detail::best_bias(obj, opt.max_scale, best_b)};
      fit.capped = true;
    }
  }
  obj.derivatives(fit.params.a, fit.params.b, g, h);
  fit.gradient_norm = g.norm();
  fit.objective = obj.value(fit.params.a, fit.params.b);
  return fit;
}

/// Equal-weight sum of calibrated subsystem scores.
inline ScoreSet fuse(const std::vector<ScoreSet> &systems,
                     const std::vector<CalibrationParams> &params) {
  require(!systems.empty(), "fuse: no subsystems");
  require_dims(systems.size() == params.size(), "fuse: one calibration per subsystem required");
  for (const auto &p : params) p.validate();
  const ScoreSet &ref = systems.front();
  ref.validate();
  ScoreSet out{ref.trials, std::vector<double>(ref.size(), 0.0)};
  const double k = static_cast<double>(systems.size());
  for (std::size_t s = 0; s < systems.size(); ++s) {
    const ScoreSet &cur = systems[s];
    cur.validate();
    const std::size_t n = std::max(cur.size(), ref.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= cur.size() || i >= ref.size() || !(cur.trials[i] == ref.trials[i])) {
        const Trial &t = i < ref.size() ? ref.trials[i] : cur.trials[i];
        throw FormatError("fuse: subsystem " + std::to_string(s) + " misaligned at trial " +
                          std::to_string(i) + " (" + t.enroll + " " + t.test + ")");
      }
    }
    for (std::size_t i = 0; i < ref.size(); ++i) out.scores[i] += params[s](cur.scores[i]) / k;
  }
  return out;
}

using CalibrationTable = std::map<std::string, CalibrationParams>;

inline nlohmann::json calibration_to_json(const CalibrationTable &t) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto &[id, p] : t) j[id] = {{"a", p.a}, {"b", p.b}};
  return j;
}

inline CalibrationTable calibration_from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw FormatError("calibration params: expected an object");
  CalibrationTable t;
  for (const auto &[id, v] : j.items()) {
    if (!v.is_object() || !v.contains("a") || !v.contains("b") || !v["a"].is_number() ||
        !v["b"].is_number())
      throw FormatError("calibration params: entry '" + id + "' needs numeric a and b");
    CalibrationParams p{v["a"].get<double>(), v["b"].get<double>()};
    try {
      p.validate();
    } catch (const ConfigError &e) {
      throw FormatError("calibration params: entry '" + id + "': " + e.what());
    }
    t.emplace(id, p);
  }
  return t;
}

inline void write_calibration(const std::string &path, const CalibrationTable &t) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path);
  os << calibration_to_json(t).dump(2) << '\n';
}

inline CalibrationTable read_calibration(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  try {
    return calibration_from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace fsv
