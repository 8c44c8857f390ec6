// fsv/trials.hpp

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
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsv/common.hpp"

namespace fsv {

struct Trial {
  std::string enroll;
  std::string test;

  bool operator==(const Trial &) const = default;
  auto operator<=>(const Trial &) const = default;
};

enum class TrialLabel : std::uint8_t { impostor = 0, target = 1 };

/// Ordered enroll-test pairs, optionally labelled.
struct TrialList {
  std::vector<Trial> trials;
  std::vector<TrialLabel> labels;  // empty or one per trial

  std::size_t size() const { return trials.size(); }
  bool labelled() const { return !labels.empty(); }

  void validate() const {
    require_dims(labels.empty() || labels.size() == trials.size(), "trial list: label count mismatch");
    std::set<Trial> seen;
    for (const auto &t : trials) {
      if (t.enroll.empty() || t.test.empty()) throw FormatError("trial list: empty utterance id");
      if (!seen.insert(t).second)
        throw FormatError("trial list: duplicate trial " + t.enroll + " " + t.test);
    }
  }
};

/// Scores aligned with a trial list.
struct ScoreSet {
  std::vector<Trial> trials;
  std::vector<double> scores;

  std::size_t size() const { return trials.size(); }

  void validate() const {
    require_dims(trials.size() == scores.size(), "score set: trial/score count mismatch");
  }
};

/// Scores split by class, as consumed by metrics and calibration.
struct LabeledScores {
  std::vector<double> target;
  std::vector<double> nontarget;

  void require_both(const std::string &what) const {
    if (target.empty() || nontarget.empty())
      throw DegenerateError(what + ": need both target and impostor scores (got " +
                            std::to_string(target.size()) + " targets, " +
                            std::to_string(nontarget.size()) + " impostors)");
  }
};

/// Joins scores with a key; every scored trial must be in the key.
inline LabeledScores label_scores(const ScoreSet &scores, const TrialList &key) {
  scores.validate();
  require(key.labelled(), "key has no labels");
  std::map<Trial, TrialLabel> lookup;
  for (std::size_t i = 0; i < key.size(); ++i) lookup.emplace(key.trials[i], key.labels[i]);
  LabeledScores out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto it = lookup.find(scores.trials[i]);
    if (it == lookup.end())
      throw FormatError("trial " + scores.trials[i].enroll + " " + scores.trials[i].test + " not in key");
    (it->second == TrialLabel::target ? out.target : out.nontarget).push_back(scores.scores[i]);
  }
  return out;
}

inline LabeledScores label_scores(const std::vector<double> &scores,
                                  const std::vector<TrialLabel> &labels) {
  require_dims(scores.size() == labels.size(), "label_scores: size mismatch");
  LabeledScores out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    (labels[i] == TrialLabel::target ? out.target : out.nontarget).push_back(scores[i]);
  return out;
}

namespace detail {

inline std::ifstream open_text(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  return is;
}

inline std::ofstream create_text(const std::string &path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path);
  return os;
}

}  // namespace detail

/// Key lines: `enroll test tgt|imp`; unlabelled lists have two columns.
inline TrialList read_trials(std::istream &is, const std::string &name = "trials") {
  TrialList out;
  std::string line;
  int lineno = 0;
  bool any_labels = false, any_plain = false;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string e, t, lab, extra;
    if (!(ls >> e)) continue;
    if (!(ls >> t)) throw FormatError(name + ":" + std::to_string(lineno) + ": expected 'enroll test [tgt|imp]'");
    out.trials.push_back({e, t});
    if (ls >> lab) {
      if (lab == "tgt" || lab == "target") out.labels.push_back(TrialLabel::target);
      else if (lab == "imp" || lab == "nontarget" || lab == "impostor") out.labels.push_back(TrialLabel::impostor);
      else throw FormatError(name + ":" + std::to_string(lineno) + ": bad label '" + lab + "'");
      any_labels = true;
    } else {
      any_plain = true;
    }
    if (ls >> extra) throw FormatError(name + ":" + std::to_string(lineno) + ": trailing fields");
  }
  if (any_labels && any_plain) throw FormatError(name + ": mixed labelled and unlabelled lines");
  out.validate();
  return out;
}

inline TrialList read_trials(const std::string &path) {
  auto is = detail::open_text(path);
  return read_trials(is, path);
}

inline void write_trials(std::ostream &os, const TrialList &list) {
  list.validate();
  for (std::size_t i = 0; i < list.size(); ++i) {
    os << list.trials[i].enroll << ' ' << list.trials[i].test;
    if (list.labelled()) os << (list.labels[i] == TrialLabel::target ? " tgt" : " imp");
    os << '\n';
  }
}

inline void write_trials(const std::string &path, const TrialList &list) {
  auto os = detail::create_text(path);
  write_trials(os, list);
}

/// Score lines: `enroll test score`.
inline ScoreSet read_scores(std::istream &is, const std::string &name = "scores") {
  ScoreSet out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string e, t, s, extra;
    if (!(ls >> e)) continue;
    if (!(ls >> t >> s) || (ls >> extra))
      throw FormatError(name + ":" + std::to_string(lineno) + ": expected 'enroll test score'");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != s.size()) throw FormatError(name + ":" + std::to_string(lineno) + ": bad score '" + s + "'");
    out.trials.push_back({e, t});
    out.scores.push_back(v);
  }
  return out;
}

inline ScoreSet read_scores(const std::string &path) {
  auto is = detail::open_text(path);
  return read_scores(is, path);
}

/// Round-trip exact (17 significant digits).
inline void write_scores(std::ostream &os, const ScoreSet &s) {
  s.validate();
  os << std::setprecision(17);
  for (std::size_t i = 0; i < s.size(); ++i)
    os << s.trials[i].enroll << ' ' << s.trials[i].test << ' ' << s.scores[i] << '\n';
}

inline void write_scores(const std::string &path, const ScoreSet &s) {
  auto os = detail::create_text(path);
  write_scores(os, s);
}

using CohortScoreMap = std::unordered_map<std::string, std::vector<double>>;

/// Cohort score archive lines: `utt s1 s2 ...`.
inline CohortScoreMap read_cohort_scores(std::istream &is, const std::string &name = "cohort") {
  CohortScoreMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string id;
    if (!(ls >> id)) continue;
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      try {
        v.push_back(std::stod(tok, &used));
      } catch (const std::exception &) {
        used = 0;
      }
      if (used != tok.size()) throw FormatError(name + ":" + std::to_string(lineno) + ": bad score '" + tok + "'");
    }
    if (!out.emplace(id, std::move(v)).second)
      throw FormatError(name + ":" + std::to_string(lineno) + ": duplicate utterance " + id);
  }
  return out;
}

inline CohortScoreMap read_cohort_scores(const std::string &path) {
  auto is = detail::open_text(path);
  return read_cohort_scores(is, path);
}

inline void write_cohort_scores(std::ostream &os, const CohortScoreMap &m) {
  std::vector<std::string> ids;
  for (const auto &kv : m) ids.push_back(kv.first);
  std::sort(ids.begin(), ids.end());
  os << std::setprecision(17);
  for (const auto &id : ids) {
    os << id;
    for (double v : m.at(id)) os << ' ' << v;
    os << '\n';
  }
}

inline void write_cohort_scores(const std::string &path, const CohortScoreMap &m) {
  auto os = detail::create_text(path);
  write_cohort_scores(os, m);
}

}  // namespace fsv
