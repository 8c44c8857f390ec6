// fsv/score_norm.hpp

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
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsv/common.hpp"
#include "fsv/embedding.hpp"
#include "fsv/trials.hpp"

namespace fsv {

inline constexpr int kDefaultTopX = 10;

/// Mean and population std of a selected cohort subset.
struct CohortStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

/// The top_x largest scores, ties kept in input order. top_x beyond the
/// cohort size is clamped (reported through `clamped`).
inline std::vector<double> select_top_cohort(const std::vector<double> &scores, int top_x,
                                             bool *clamped = nullptr) {
  if (scores.empty()) throw DegenerateError("select_top_cohort: empty cohort");
  require(top_x >= 2, "select_top_cohort: top_x must be at least 2");
  std::size_t k = static_cast<std::size_t>(top_x);
  if (clamped) *clamped = k > scores.size();
  k = std::min(k, scores.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
  std::vector<double> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scores[order[i]];
  return out;
}

inline CohortStats cohort_stats(const std::vector<double> &subset) {
  if (subset.empty()) throw DegenerateError("cohort_stats: empty subset");
  CohortStats st;
  st.count = subset.size();
  const double n = static_cast<double>(subset.size());
  // shifted by the first element so equal inputs give exactly zero spread
  const double ref = subset.front();
  double shift = 0.0;
  for (double v : subset) shift += v - ref;
  st.mean = ref + shift / n;
  double ss = 0.0;
  for (double v : subset) ss += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(ss / n);
  return st;
}

inline CohortStats top_cohort_stats(const std::vector<double> &scores, int top_x,
                                    bool *clamped = nullptr) {
  return cohort_stats(select_top_cohort(scores, top_x, clamped));
}

/// Symmetric adaptive normalization of one raw score.
inline double as_norm(double s, const CohortStats &enroll, const CohortStats &test) {
  if (!(enroll.stddev > 0.0)) throw DegenerateError("as_norm: enroll cohort has zero spread");
  if (!(test.stddev > 0.0)) throw DegenerateError("as_norm: test cohort has zero spread");
  return 0.5 * ((s - enroll.mean) / enroll.stddev + (s - test.mean) / test.stddev);
}

struct AsNormReport {
  std::size_t clamped_utterances = 0;
};

namespace detail {

class CohortStatsCache {
 public:
  CohortStatsCache(const CohortScoreMap &scores, int top_x, const char *side)
      : scores_(scores), top_x_(top_x), side_(side) {}

  const CohortStats &get(const std::string &utt, AsNormReport *report) {
    auto it = cache_.find(utt);
    if (it != cache_.end()) return it->second;
    auto src = scores_.find(utt);
    if (src == scores_.end())
      throw DegenerateError(std::string("as_norm: no ") + side_ + " cohort scores for utterance " + utt);
    bool clamped = false;
    CohortStats st;
    try {
      st = top_cohort_stats(src->second, top_x_, &clamped);
    } catch (const DegenerateError &e) {
      throw DegenerateError(std::string(e.what()) + " (utterance " + utt + ")");
    }
    if (!(st.stddev > 0.0))
      throw DegenerateError("as_norm: zero cohort spread for utterance " + utt);
    if (clamped && report) ++report->clamped_utterances;
    return cache_.emplace(utt, st).first->second;
  }

 private:
  const CohortScoreMap &scores_;
  int top_x_;
  const char *side_;
  std::unordered_map<std::string, CohortStats> cache_;
};

}  // namespace detail

/// Normalizes every trial from precomputed per-utterance cohort scores.
inline ScoreSet normalize_trial_set(const ScoreSet &scores, const CohortScoreMap &enroll_cohort,
                                    const CohortScoreMap &test_cohort, int top_x = kDefaultTopX,
                                    AsNormReport *report = nullptr) {
  scores.validate();
  require(top_x >= 2, "as_norm: top_x must be at least 2");
  detail::CohortStatsCache ec(enroll_cohort, top_x, "enroll");
  detail::CohortStatsCache tc(test_cohort, top_x, "test");
  ScoreSet out = scores;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto &t = out.trials[i];
    out.scores[i] = as_norm(scores.scores[i], ec.get(t.enroll, report), tc.get(t.test, report));
  }
  return out;
}

using PairScorer = std::function<double(const Vector &, const Vector &)>;

/// Scores each listed utterance against the cohort; a cohort entry with the
/// same id as the utterance is skipped.
inline CohortScoreMap score_against_cohort(const EmbeddingSet &utts,
                                           const std::vector<std::string> &wanted,
                                           const EmbeddingSet &cohort, const PairScorer &scorer) {
  utts.validate();
  cohort.validate();
  require_dims(utts.dim() == cohort.dim(), "as_norm: cohort dimension mismatch");
  const auto idx = utts.index();
  CohortScoreMap out;
  for (const auto &id : wanted) {
    if (out.count(id)) continue;
    auto it = idx.find(id);
    if (it == idx.end()) throw DegenerateError("as_norm: no embedding for utterance " + id);
    const Vector x = utts.data.row(it->second).transpose();
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(cohort.size()));
    for (Index c = 0; c < cohort.size(); ++c) {
      if (cohort.ids[static_cast<std::size_t>(c)] == id) continue;
      v.push_back(scorer(x, cohort.data.row(c).transpose()));
    }
    out.emplace(id, std::move(v));
  }
  return out;
}

/// Embedding-level entry point: cohort scores are computed once per utterance.
inline ScoreSet normalize_trial_set(const ScoreSet &scores, const EmbeddingSet &enroll,
                                    const EmbeddingSet &test, const EmbeddingSet &cohort,
                                    const PairScorer &scorer, int top_x = kDefaultTopX,
                                    AsNormReport *report = nullptr) {
  scores.validate();
  std::vector<std::string> e_ids, t_ids;
  for (const auto &t : scores.trials) {
    e_ids.push_back(t.enroll);
    t_ids.push_back(t.test);
  }
  // enroll side scored as (enroll, cohort), test side as (cohort, test)
  const auto ec = score_against_cohort(enroll, e_ids, cohort, scorer);
  const auto tc = score_against_cohort(
      test, t_ids, cohort, [&scorer](const Vector &x, const Vector &c) { return scorer(c, x); });
  return normalize_trial_set(scores, ec, tc, top_x, report);
}

}  // namespace fsv
