// fsv/config.hpp

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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fsv/dereverb.hpp"
#include "fsv/embedder.hpp"
#include "fsv/features.hpp"
#include "fsv/gmm.hpp"
#include "fsv/ivector.hpp"
#include "fsv/metrics.hpp"
#include "fsv/score_norm.hpp"

namespace fsv {

using nlohmann::json;

/// Parameters of the generated far-field benchmark.
struct SyntheticSpec {
  int speakers = 60;
  int train_speakers = 40;
  int dev_speakers = 10;
  int eval_speakers = 10;
  int train_utterances = 6;   // clean, per training speaker
  int adapt_utterances = 3;   // far-field, per training speaker
  int trial_utterances = 8;   // far-field, per dev/eval speaker
  double seconds = 2.0;
  int sample_rate = 16000;
  double t60 = 0.3;
  double snr_db = 10.0;
  bool augment_training = true;  // add one far-field copy per training utterance
  int max_order = 24;  // image-source order
};

struct DataSpec {
  bool synthetic = true;
  SyntheticSpec generate;
  // manifests: `utt-id wav-path speaker`; keys: `enroll test tgt|imp`
  std::string train, adapt, dev, eval, dev_trials, eval_trials;
};

struct FeatureSpec {
  FeatureKind kind = FeatureKind::mfcc30;
  bool cms = false;
  double cms_window = 3.0;
  bool resample = false;  // 16 kHz -> 8 kHz before extraction

  FeatureConfig feature_config() const {
    FeatureConfig c = FeatureConfig::preset(kind);
    c.cms = cms;
    c.cms_window = cms_window;
    return c;
  }
};

struct IvectorSpec {
  UbmConfig ubm{.components = 32, .iterations = 8, .floor_factor = 1e-4, .seed = 0,
                .kmeans_subsample = 20000, .kmeans_iterations = 10};
  TvConfig tv{.rank = 40, .iterations = 6, .min_divergence = true, .init_scale = 0.1, .seed = 0};
  int frame_stride = 2;  // UBM frame subsampling
};

struct EmbedderSpec {
  Index hidden = 64;
  Index embed_dim = 32;
  Pooling pooling = Pooling::mean_std;
  EmbedTrainConfig train{.steps = 1500, .batch_size = 16, .learning_rate = 0.05,
                         .segment_frames = 100, .seed = 0};
  AsoftmaxConfig asoftmax;
};

struct BackendSpec {
  bool coral = true;
  double coral_ridge = 1e-3;
  std::string whiten_source = "train";  // train | adapt
  int plda_rank = 0;                    // 0: min(D, speakers - 1)
  int plda_iterations = 10;
};

struct AsNormSpec {
  bool enabled = true;
  int top_x = kDefaultTopX;
};

struct SystemSpec {
  std::string name;
  std::string extractor;  // ivector | softmax | asoftmax
  bool wpe = false;
  std::string scoring = "plda";  // plda | cosine
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "fsv_exp";
  std::string cache_dir;  // empty: <output_dir>/cache; FSV_CACHE_DIR wins
  unsigned threads = 0;   // per-utterance workers; 0: hardware concurrency
  DataSpec data;
  FeatureSpec features;
  WpeConfig wpe;
  IvectorSpec ivector;
  EmbedderSpec embedder;
  BackendSpec backend;
  AsNormSpec asnorm;
  double calibration_prior = 0.0;  // 0: use eval.p_target
  DcfParams dcf;
  bool det_plot = true;
  std::vector<SystemSpec> systems = default_systems();
  std::vector<std::string> fusion;  // empty: all WPE-enabled systems

  double effective_prior() const { return calibration_prior > 0 ? calibration_prior : dcf.p_target; }

  static std::vector<SystemSpec> default_systems() {
    std::vector<SystemSpec> s;
    for (const char *x : {"ivector", "softmax", "asoftmax"}) {
      s.push_back({x, x, false, "plda"});
      s.push_back({std::string(x) + "-wpe", x, true, "plda"});
    }
    return s;
  }

  std::vector<std::string> fusion_systems() const {
    if (!fusion.empty()) return fusion;
    std::vector<std::string> out;
    for (const auto &s : systems)
      if (s.wpe) out.push_back(s.name);
    return out;
  }
};

namespace detail {

// Reads known keys, records type errors and unknown keys; "_"-prefixed keys are comments.
class JsonReader {
 public:
  JsonReader(const json *j, std::string path, std::vector<std::string> &errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (j_ && !j_->is_object()) {
      errors_.push_back(path_ + ": expected an object");
      j_ = nullptr;
    }
  }
  ~JsonReader() {
    if (!j_) return;
    for (const auto &[k, v] : j_->items())
      if (!seen_.count(k) && (k.empty() || k[0] != '_'))
        errors_.push_back(path_ + ": unknown key '" + k + "'");
  }
  JsonReader(const JsonReader &) = delete;
  JsonReader &operator=(const JsonReader &) = delete;

  template <typename T>
  void get(const std::string &key, T &out) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    try {
      out = j_->at(key).get<T>();
    } catch (const json::exception &) {
      errors_.push_back(where(key) + ": wrong type (" + std::string(j_->at(key).type_name()) + ")");
    }
  }

  template <typename T, typename Parse>
  void get_enum(const std::string &key, T &out, Parse parse) {
    std::string s;
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    get(key, s);
    try {
      out = parse(s);
    } catch (const Error &e) {
      errors_.push_back(where(key) + ": " + e.what());
    }
  }

  const json *child(const std::string &key) {
    seen_.insert(key);
    return j_ && j_->contains(key) ? &j_->at(key) : nullptr;
  }
  std::string where(const std::string &key) const { return path_ + "." + key; }
  std::vector<std::string> &errors() { return errors_; }

 private:
  const json *j_;
  std::string path_;
  std::vector<std::string> &errors_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Parses a config document; problems are appended to `errors` and defaults kept.
inline ExperimentConfig config_from_json(const json &doc, std::vector<std::string> &errors) {
  ExperimentConfig c;
  detail::JsonReader r(&doc, "config", errors);
  r.get("seed", c.seed);
  r.get("output_dir", c.output_dir);
  r.get("cache_dir", c.cache_dir);
  r.get("threads", c.threads);
  {
    detail::JsonReader d(r.child("data"), "config.data", errors);
    d.get("synthetic", c.data.synthetic);
    d.get("train", c.data.train);
    d.get("adapt", c.data.adapt);
    d.get("dev", c.data.dev);
    d.get("eval", c.data.eval);
    d.get("dev_trials", c.data.dev_trials);
    d.get("eval_trials", c.data.eval_trials);
    detail::JsonReader g(d.child("generate"), "config.data.generate", errors);
    auto &s = c.data.generate;
    g.get("speakers", s.speakers);
    g.get("train_speakers", s.train_speakers);
    g.get("dev_speakers", s.dev_speakers);
    g.get("eval_speakers", s.eval_speakers);
    g.get("train_utterances", s.train_utterances);
    g.get("adapt_utterances", s.adapt_utterances);
    g.get("trial_utterances", s.trial_utterances);
    g.get("seconds", s.seconds);
    g.get("sample_rate", s.sample_rate);
    g.get("t60", s.t60);
    g.get("snr_db", s.snr_db);
    g.get("augment_training", s.augment_training);
    g.get("max_order", s.max_order);
  }
  {
    detail::JsonReader f(r.child("features"), "config.features", errors);
    f.get_enum("kind", c.features.kind, [](const std::string &s) { return parse_feature_kind(s); });
    f.get("cms", c.features.cms);
    f.get("cms_window", c.features.cms_window);
    f.get("resample", c.features.resample);
  }
  {
    detail::JsonReader w(r.child("wpe"), "config.wpe", errors);
    w.get("taps", c.wpe.taps);
    w.get("delay", c.wpe.delay);
    w.get("iterations", c.wpe.iterations);
    w.get("regularization", c.wpe.regularization);
    w.get("variance_floor", c.wpe.variance_floor);
    w.get("win_seconds", c.wpe.win_seconds);
    w.get("shift_seconds", c.wpe.shift_seconds);
  }
  {
    detail::JsonReader iv(r.child("ivector"), "config.ivector", errors);
    iv.get("frame_stride", c.ivector.frame_stride);
    detail::JsonReader u(iv.child("ubm"), "config.ivector.ubm", errors);
    u.get("components", c.ivector.ubm.components);
    u.get("iterations", c.ivector.ubm.iterations);
    u.get("floor_factor", c.ivector.ubm.floor_factor);
    u.get("kmeans_subsample", c.ivector.ubm.kmeans_subsample);
    u.get("kmeans_iterations", c.ivector.ubm.kmeans_iterations);
    detail::JsonReader t(iv.child("tv"), "config.ivector.tv", errors);
    t.get("rank", c.ivector.tv.rank);
    t.get("iterations", c.ivector.tv.iterations);
    t.get("min_divergence", c.ivector.tv.min_divergence);
    t.get("init_scale", c.ivector.tv.init_scale);
  }
  {
    detail::JsonReader e(r.child("embedder"), "config.embedder", errors);
    e.get("hidden", c.embedder.hidden);
    e.get("embed_dim", c.embedder.embed_dim);
    e.get_enum("pooling", c.embedder.pooling, [](const std::string &s) { return parse_pooling(s); });
    e.get("steps", c.embedder.train.steps);
    e.get("batch_size", c.embedder.train.batch_size);
    e.get("learning_rate", c.embedder.train.learning_rate);
    e.get("segment_frames", c.embedder.train.segment_frames);
    detail::JsonReader a(e.child("asoftmax"), "config.embedder.asoftmax", errors);
    a.get("margin", c.embedder.asoftmax.margin);
    a.get("lambda_start", c.embedder.asoftmax.lambda_start);
    a.get("lambda_decay", c.embedder.asoftmax.lambda_decay);
    a.get("lambda_min", c.embedder.asoftmax.lambda_min);
  }
  {
    detail::JsonReader b(r.child("backend"), "config.backend", errors);
    b.get("coral", c.backend.coral);
    b.get("coral_ridge", c.backend.coral_ridge);
    b.get("whiten_source", c.backend.whiten_source);
    b.get("plda_rank", c.backend.plda_rank);
    b.get("plda_iterations", c.backend.plda_iterations);
  }
  {
    detail::JsonReader a(r.child("asnorm"), "config.asnorm", errors);
    a.get("enabled", c.asnorm.enabled);
    a.get("top_x", c.asnorm.top_x);
  }
  {
    detail::JsonReader cal(r.child("calibration"), "config.calibration", errors);
    cal.get("prior", c.calibration_prior);
  }
  {
    detail::JsonReader ev(r.child("eval"), "config.eval", errors);
    ev.get("p_target", c.dcf.p_target);
    ev.get("c_miss", c.dcf.c_miss);
    ev.get("c_fa", c.dcf.c_fa);
    ev.get("det_plot", c.det_plot);
  }
  if (const json *sys = r.child("systems")) {
    if (!sys->is_array()) {
      errors.push_back("config.systems: expected an array");
    } else {
      c.systems.clear();
      for (std::size_t i = 0; i < sys->size(); ++i) {
        detail::JsonReader s(&(*sys)[i], "config.systems[" + std::to_string(i) + "]", errors);
        SystemSpec spec;
        s.get("name", spec.name);
        s.get("extractor", spec.extractor);
        s.get("wpe", spec.wpe);
        s.get("scoring", spec.scoring);
        c.systems.push_back(spec);
      }
    }
  }
  r.get("fusion", c.fusion);
  return c;
}

/// Full document; `annotate` adds "_doc" strings describing each section.
inline json config_to_json(const ExperimentConfig &c, bool annotate = false) {
  const auto &s = c.data.generate;
  json j;
  if (annotate)
    j["_doc"] = "fsv experiment. Relative paths are resolved against the working directory. "
                "FSV_CACHE_DIR overrides cache_dir. threads=0 uses every hardware thread; results do not "
                "depend on it.";
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["cache_dir"] = c.cache_dir;
  j["threads"] = c.threads;
  j["data"] = {{"synthetic", c.data.synthetic},
               {"train", c.data.train},
               {"adapt", c.data.adapt},
               {"dev", c.data.dev},
               {"eval", c.data.eval},
               {"dev_trials", c.data.dev_trials},
               {"eval_trials", c.data.eval_trials},
               {"generate",
                {{"speakers", s.speakers},
                 {"train_speakers", s.train_speakers},
                 {"dev_speakers", s.dev_speakers},
                 {"eval_speakers", s.eval_speakers},
                 {"train_utterances", s.train_utterances},
                 {"adapt_utterances", s.adapt_utterances},
                 {"trial_utterances", s.trial_utterances},
                 {"seconds", s.seconds},
                 {"sample_rate", s.sample_rate},
                 {"t60", s.t60},
                 {"snr_db", s.snr_db},
                 {"augment_training", s.augment_training},
                 {"max_order", s.max_order}}}};
  j["features"] = {{"kind", std::string(to_string(c.features.kind))},
                   {"cms", c.features.cms},
                   {"cms_window", c.features.cms_window},
                   {"resample", c.features.resample}};
  j["wpe"] = {{"taps", c.wpe.taps},
              {"delay", c.wpe.delay},
              {"iterations", c.wpe.iterations},
              {"regularization", c.wpe.regularization},
              {"variance_floor", c.wpe.variance_floor},
              {"win_seconds", c.wpe.win_seconds},
              {"shift_seconds", c.wpe.shift_seconds}};
  j["ivector"] = {{"frame_stride", c.ivector.frame_stride},
                  {"ubm",
                   {{"components", c.ivector.ubm.components},
                    {"iterations", c.ivector.ubm.iterations},
                    {"floor_factor", c.ivector.ubm.floor_factor},
                    {"kmeans_subsample", c.ivector.ubm.kmeans_subsample},
                    {"kmeans_iterations", c.ivector.ubm.kmeans_iterations}}},
                  {"tv",
                   {{"rank", c.ivector.tv.rank},
                    {"iterations", c.ivector.tv.iterations},
                    {"min_divergence", c.ivector.tv.min_divergence},
                    {"init_scale", c.ivector.tv.init_scale}}}};
  j["embedder"] = {{"hidden", c.embedder.hidden},
                   {"embed_dim", c.embedder.embed_dim},
                   {"pooling", to_string(c.embedder.pooling)},
                   {"steps", c.embedder.train.steps},
                   {"batch_size", c.embedder.train.batch_size},
                   {"learning_rate", c.embedder.train.learning_rate},
                   {"segment_frames", c.embedder.train.segment_frames},
                   {"asoftmax",
                    {{"margin", c.embedder.asoftmax.margin},
                     {"lambda_start", c.embedder.asoftmax.lambda_start},
                     {"lambda_decay", c.embedder.asoftmax.lambda_decay},
                     {"lambda_min", c.embedder.asoftmax.lambda_min}}}};
  j["backend"] = {{"coral", c.backend.coral},
                  {"coral_ridge", c.backend.coral_ridge},
                  {"whiten_source", c.backend.whiten_source},
                  {"plda_rank", c.backend.plda_rank},
                  {"plda_iterations", c.backend.plda_iterations}};
  j["asnorm"] = {{"enabled", c.asnorm.enabled}, {"top_x", c.asnorm.top_x}};
  j["calibration"] = {{"prior", c.calibration_prior}};
  j["eval"] = {{"p_target", c.dcf.p_target},
               {"c_miss", c.dcf.c_miss},
               {"c_fa", c.dcf.c_fa},
               {"det_plot", c.det_plot}};
  j["systems"] = json::array();
  for (const auto &sys : c.systems)
    j["systems"].push_back(
        {{"name", sys.name}, {"extractor", sys.extractor}, {"wpe", sys.wpe}, {"scoring", sys.scoring}});
  j["fusion"] = c.fusion;
  if (annotate) {
    j["data"]["_doc"] =
        "synthetic=true generates the far-field benchmark under <output_dir>/data; otherwise "
        "train/adapt/dev/eval are manifests (utt-id wav-path speaker) and *_trials are keys "
        "(enroll test tgt|imp). adapt is the in-domain set used for CORAL and the AS-Norm cohort.";
    j["data"]["generate"]["_doc"] =
        "speakers are split train/dev/eval; the dev and eval speakers are the trial benchmark. "
        "far-field = ISM room at t60 seconds plus pink noise at snr_db; max_order bounds the "
        "image order and with it the RIR length.";
    j["features"]["_doc"] =
        "kind: mfcc20 mfcc30 pncc mfbank8k mfbank16k gfbank. mfbank8k needs resample=true for "
        "16 kHz input.";
    j["wpe"]["_doc"] = "systems with wpe=true dereverberate the adapt, dev and eval utterances; models are "
        "trained on the original audio. delay in STFT frames.";
    j["ivector"]["_doc"] = "full-covariance UBM, total variability rank, frame subsampling for UBM EM.";
    j["embedder"]["_doc"] =
        "toy frame encoder + statistics pooling; pooling: mean | mean_std; segment_frames=0 "
        "trains on full utterances.";
    j["backend"]["_doc"] = "CORAL of train onto adapt, whitening, length norm, PLDA (or cosine).";
    j["asnorm"]["_doc"] = "top_x most positive cohort scores per side; cohort = adapt set.";
    j["calibration"]["_doc"] = "logistic calibration prior; 0 uses eval.p_target.";
    j["eval"]["_doc"] = "DCF operating point; det_plot writes det_dev.svg and det_eval.svg.";
    j["_systems_doc"] =
        "extractor: ivector | softmax | asoftmax; scoring: plda | cosine. fusion lists system "
        "names; empty fuses all systems with wpe=true.";
  }
  return j;
}

/// Every violation at once; empty when the config is usable.
inline std::vector<std::string> validate_config(const ExperimentConfig &c) {
  std::vector<std::string> v;
  auto check = [&v](bool ok, const std::string &msg) {
    if (!ok) v.push_back(msg);
  };
  auto module = [&v](const std::string &where, auto &&fn) {
    try {
      fn();
    } catch (const Error &e) {
      v.push_back(where + ": " + e.what());
    }
  };
  check(!c.output_dir.empty(), "output_dir: must not be empty");
  if (c.data.synthetic) {
    const auto &s = c.data.generate;
    check(s.train_speakers >= 2, "data.generate.train_speakers: need at least 2");
    check(s.dev_speakers >= 2, "data.generate.dev_speakers: need at least 2");
    check(s.eval_speakers >= 2, "data.generate.eval_speakers: need at least 2");
    check(s.train_speakers + s.dev_speakers + s.eval_speakers <= s.speakers,
          "data.generate: train+dev+eval speakers exceed speakers");
    check(s.train_utterances >= 2, "data.generate.train_utterances: need at least 2");
    check(s.adapt_utterances >= 1, "data.generate.adapt_utterances: need at least 1");
    check(s.trial_utterances >= 2, "data.generate.trial_utterances: need at least 2");
    check(s.seconds >= 0.5, "data.generate.seconds: need at least 0.5");
    check(s.sample_rate == 16000 || s.sample_rate == 8000, "data.generate.sample_rate: 8000 or 16000");
    check(s.t60 > 0.05 && s.t60 < 2.0, "data.generate.t60: must lie in (0.05, 2)");
    check(std::isfinite(s.snr_db), "data.generate.snr_db: must be finite");
    check(s.max_order >= 0 && s.max_order <= 40, "data.generate.max_order: must lie in [0, 40]");
  } else {
    auto file = [&](const std::string &key, const std::string &path) {
      if (path.empty()) v.push_back("data." + key + ": required when synthetic=false");
      else if (!std::filesystem::is_regular_file(path))
        v.push_back("data." + key + ": no such file '" + path + "'");
      else if (std::filesystem::file_size(path) == 0)
        v.push_back("data." + key + ": empty manifest '" + path + "'");
    };
    file("train", c.data.train);
    file("adapt", c.data.adapt);
    file("dev", c.data.dev);
    file("eval", c.data.eval);
    file("dev_trials", c.data.dev_trials);
    file("eval_trials", c.data.eval_trials);
  }
  const int rate = c.data.synthetic ? c.data.generate.sample_rate : 16000;
  const int need = feature_sample_rate(c.features.kind);
  if (need != rate && !(c.features.resample && rate == 16000 && need == 8000))
    v.push_back("features.kind=" + std::string(to_string(c.features.kind)) + " expects " +
                std::to_string(need) + " Hz input; enable features.resample");
  if (c.features.resample && need != 8000)
    v.push_back("features.resample: only meaningful for mfbank8k");
  check(c.features.cms_window > 0, "features.cms_window: must be positive");
  module("wpe", [&] { c.wpe.validate(); });
  check(c.ivector.ubm.components >= 1, "ivector.ubm.components: must be >= 1");
  check(c.ivector.ubm.iterations >= 1, "ivector.ubm.iterations: must be >= 1");
  check(c.ivector.tv.rank >= 1, "ivector.tv.rank: must be >= 1");
  check(c.ivector.tv.iterations >= 1, "ivector.tv.iterations: must be >= 1");
  check(c.ivector.frame_stride >= 1, "ivector.frame_stride: must be >= 1");
  check(c.embedder.hidden >= 1 && c.embedder.embed_dim >= 1, "embedder: dimensions must be >= 1");
  check(c.embedder.train.steps >= 1, "embedder.steps: must be >= 1");
  check(c.embedder.train.batch_size >= 1, "embedder.batch_size: must be >= 1");
  check(c.embedder.train.learning_rate >= 0, "embedder.learning_rate: must be >= 0");
  check(c.embedder.train.segment_frames >= 0, "embedder.segment_frames: must be >= 0");
  module("embedder.asoftmax", [&] { c.embedder.asoftmax.validate(); });
  check(c.backend.whiten_source == "train" || c.backend.whiten_source == "adapt",
        "backend.whiten_source: train | adapt");
  check(c.backend.coral_ridge >= 0, "backend.coral_ridge: must be >= 0");
  check(c.backend.plda_rank >= 0, "backend.plda_rank: must be >= 0");
  check(c.backend.plda_iterations >= 1, "backend.plda_iterations: must be >= 1");
  check(c.asnorm.top_x >= 2, "asnorm.top_x: must be >= 2");
  check(c.calibration_prior == 0.0 || (c.calibration_prior > 0 && c.calibration_prior < 1),
        "calibration.prior: 0 or in (0, 1)");
  module("eval", [&] { c.dcf.validate(); });
  check(!c.systems.empty(), "systems: at least one system required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < c.systems.size(); ++i) {
    const auto &s = c.systems[i];
    const std::string at = "systems[" + std::to_string(i) + "]";
    check(!s.name.empty(), at + ".name: must not be empty");
    check(s.name.find_first_of("/\\ \t") == std::string::npos, at + ".name: no spaces or slashes");
    check(names.insert(s.name).second, at + ".name: duplicate '" + s.name + "'");
    check(s.extractor == "ivector" || s.extractor == "softmax" || s.extractor == "asoftmax",
          at + ".extractor: ivector | softmax | asoftmax");
    check(s.scoring == "plda" || s.scoring == "cosine", at + ".scoring: plda | cosine");
  }
  for (const auto &f : c.fusion)
    check(names.count(f) > 0, "fusion: unknown system '" + f + "'");
  return v;
}

inline std::string join_violations(const std::vector<std::string> &v) {
  std::string out = std::to_string(v.size()) + " config violation(s):";
  for (const auto &s : v) out += "\n  - " + s;
  return out;
}

/// Parse + validate; throws ConfigError listing every problem.
inline ExperimentConfig load_config(const json &doc) {
  std::vector<std::string> errors;
  ExperimentConfig c = config_from_json(doc, errors);
  auto more = validate_config(c);
  errors.insert(errors.end(), more.begin(), more.end());
  if (!errors.empty()) throw ConfigError(join_violations(errors));
  return c;
}

inline ExperimentConfig load_config(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception &e) {
    throw ConfigError(path + ": " + e.what());
  }
  return load_config(doc);
}

}  // namespace fsv
