// fsv/pipeline.hpp

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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fsv/backend.hpp"
#include "fsv/cache.hpp"
#include "fsv/calibration.hpp"
#include "fsv/config.hpp"
#include "fsv/dataset.hpp"
#include "fsv/dereverb.hpp"
#include "fsv/dsp.hpp"
#include "fsv/embedder.hpp"
#include "fsv/features.hpp"
#include "fsv/gmm.hpp"
#include "fsv/ivector.hpp"
#include "fsv/metrics.hpp"
#include "fsv/model_io.hpp"
#include "fsv/parallel.hpp"
#include "fsv/score_norm.hpp"
#include "fsv/trials.hpp"

namespace fsv {

/// A pipeline stage failed; the message names the stage and, where known, the utterance.
class StageError : public Error {
 public:
  using Error::Error;
};

struct SplitMetrics {
  double min_c = 0.0;
  double act_c = 0.0;
  double eer = 0.0;
  double cllr = 0.0;
  std::size_t targets = 0;
  std::size_t nontargets = 0;
};

inline SplitMetrics compute_metrics(const LabeledScores &s, const DcfParams &p) {
  return {min_dcf(s, p).cost, act_dcf(s, p), eer(s), cllr(s), s.target.size(), s.nontarget.size()};
}

struct SystemReport {
  std::string name;
  std::string extractor;
  std::string scoring;
  bool wpe = false;
  SplitMetrics dev;
  SplitMetrics eval;
  CalibrationParams calibration;
  bool calibration_capped = false;
  bool calibration_degenerate = false;
};

struct ExperimentReport {
  std::vector<SystemReport> systems;
  std::optional<SystemReport> fusion;
  DcfParams dcf;
  double calibration_prior = 0.0;

  const SystemReport &system(const std::string &name) const {
    for (const auto &s : systems)
      if (s.name == name) return s;
    if (fusion && fusion->name == name) return *fusion;
    throw ConfigError("report: no system named " + name);
  }
};

inline json metrics_to_json(const SplitMetrics &m) {
  return {{"minC", m.min_c}, {"actC", m.act_c}, {"EER", m.eer}, {"Cllr", m.cllr},
          {"targets", m.targets}, {"nontargets", m.nontargets}};
}

inline json report_to_json(const ExperimentReport &r) {
  json j;
  j["operating_point"] = {{"p_target", r.dcf.p_target}, {"c_miss", r.dcf.c_miss}, {"c_fa", r.dcf.c_fa}};
  j["calibration_prior"] = r.calibration_prior;
  auto one = [](const SystemReport &s) {
    return json{{"name", s.name},
                {"extractor", s.extractor},
                {"scoring", s.scoring},
                {"wpe", s.wpe},
                {"dev", metrics_to_json(s.dev)},
                {"eval", metrics_to_json(s.eval)},
                {"calibration",
                 {{"a", s.calibration.a},
                  {"b", s.calibration.b},
                  {"capped", s.calibration_capped},
                  {"degenerate", s.calibration_degenerate}}}};
  };
  j["systems"] = json::array();
  for (const auto &s : r.systems) j["systems"].push_back(one(s));
  if (r.fusion) j["fusion"] = one(*r.fusion);
  return j;
}

/// Text table in the minC / actC / EER[%] / Cllr layout, dev and eval side by side.
inline std::string report_table(const ExperimentReport &r) {
  std::ostringstream os;
  os << std::fixed;
  std::size_t w = 8;
  for (const auto &s : r.systems) w = std::max(w, s.name.size());
  if (r.fusion) w = std::max(w, r.fusion->name.size());
  auto cols = [&os](const SplitMetrics &m) {
    os << std::setprecision(4) << std::setw(8) << m.min_c << std::setw(8) << m.act_c
       << std::setprecision(2) << std::setw(8) << 100.0 * m.eer << std::setprecision(4)
       << std::setw(8) << m.cllr;
  };
  os << std::left << std::setw(static_cast<int>(w)) << "system" << std::right << " |"
     << std::setw(32) << "dev" << " |" << std::setw(32) << "eval" << '\n';
  os << std::left << std::setw(static_cast<int>(w)) << "" << std::right << " |";
  for (int k = 0; k < 2; ++k)
    os << std::setw(8) << "minC" << std::setw(8) << "actC" << std::setw(8) << "EER[%]"
       << std::setw(8) << "Cllr" << (k == 0 ? " |" : "");
  os << '\n' << std::string(w + 70, '-') << '\n';
  auto row = [&](const SystemReport &s) {
    os << std::left << std::setw(static_cast<int>(w)) << s.name << std::right << " |";
    cols(s.dev);
    os << " |";
    cols(s.eval);
    os << '\n';
  };
  for (const auto &s : r.systems) row(s);
  if (r.fusion) {
    os << std::string(w + 70, '-') << '\n';
    row(*r.fusion);
  }
  os << "p_target=" << std::setprecision(4) << r.dcf.p_target << " c_miss=" << r.dcf.c_miss
     << " c_fa=" << r.dcf.c_fa << " calibration prior=" << r.calibration_prior << '\n';
  return os.str();
}

namespace detail {

struct SplitFeatures {
  std::vector<FeatureMatrix> features;
  std::vector<std::string> keys;  // content key per utterance

  std::string combined_key() const {
    ContentHash h;
    for (const auto &k : keys) h.update(k);
    return h.hex();
  }
};

inline Matrix round_f32(const Matrix &m) { return m.cast<float>().cast<double>(); }

class Runner {
 public:
  Runner(const ExperimentConfig &cfg, std::ostream *log)
      : cfg_(cfg), log_(log), cache_(ArtifactCache::resolve(cfg.cache_dir, cfg.output_dir)) {}

  ExperimentReport run() {
    namespace fs = std::filesystem;
    out_ = cfg_.output_dir;
    fs::create_directories(out_);
    prepare_data();
    ExperimentReport report;
    report.dcf = cfg_.dcf;
    report.calibration_prior = cfg_.effective_prior();
    std::map<std::string, std::pair<ScoreSet, ScoreSet>> normalized;  // name -> (dev, eval)
    std::map<std::string, CalibrationParams> params;
    std::vector<DetCurve> det_dev, det_eval;
    for (const auto &sys : cfg_.systems) {
      auto t0 = std::chrono::steady_clock::now();
      SystemReport rep;
      auto [dev, eval] = run_system(sys, rep);
      normalized[sys.name] = {dev, eval};
      params[sys.name] = rep.calibration;
      const auto dev_l = label_scores(apply_calibration(dev, rep.calibration), dev_key_);
      const auto eval_l = label_scores(apply_calibration(eval, rep.calibration), eval_key_);
      rep.dev = compute_metrics(dev_l, cfg_.dcf);
      rep.eval = compute_metrics(eval_l, cfg_.dcf);
      det_dev.push_back({sys.name, det_points(dev_l)});
      det_eval.push_back({sys.name, det_points(eval_l)});
      report.systems.push_back(rep);
      say("system " + sys.name + ": eval EER " + std::to_string(100 * rep.eval.eer) + "% (" +
          seconds_since(t0) + ")");
    }
    const auto fusion = cfg_.fusion_systems();
    if (!fusion.empty()) {
      std::vector<ScoreSet> dev, eval;
      std::vector<CalibrationParams> ps;
      for (const auto &n : fusion) {
        dev.push_back(normalized.at(n).first);
        eval.push_back(normalized.at(n).second);
        ps.push_back(params.at(n));
      }
      SystemReport f;
      f.name = "fusion";
      f.extractor = "fusion";
      f.scoring = "fusion";
      for (std::size_t i = 0; i < fusion.size(); ++i) f.scoring += (i ? "+" : ":") + fusion[i];
      f.calibration = {};
      ScoreSet fd = stage("fusion", "", [&] { return fuse(dev, ps); });
      ScoreSet fe = stage("fusion", "", [&] { return fuse(eval, ps); });
      write_scores((out_ / "fusion_dev.scores").string(), fd);
      write_scores((out_ / "fusion_eval.scores").string(), fe);
      const auto dl = label_scores(fd, dev_key_), el = label_scores(fe, eval_key_);
      f.dev = compute_metrics(dl, cfg_.dcf);
      f.eval = compute_metrics(el, cfg_.dcf);
      det_dev.push_back({"fusion", det_points(dl)});
      det_eval.push_back({"fusion", det_points(el)});
      report.fusion = f;
    }
    if (cfg_.det_plot) {
      write_det_svg((out_ / "det_dev.svg").string(), det_dev, "DET dev");
      write_det_svg((out_ / "det_eval.svg").string(), det_eval, "DET eval");
    }
    {
      std::ofstream os(out_ / "report.json");
      os << report_to_json(report).dump(2) << '\n';
      std::ofstream ts(out_ / "report.txt");
      ts << report_table(report);
    }
    return report;
  }

 private:
  const ExperimentConfig &cfg_;
  std::ostream *log_;
  ArtifactCache cache_;
  std::filesystem::path out_;
  std::map<std::string, Manifest> manifests_;
  std::map<std::string, std::vector<std::string>> wav_hash_;
  TrialList dev_key_, eval_key_;
  std::map<std::pair<std::string, bool>, SplitFeatures> features_;
  std::map<std::string, std::map<std::string, EmbeddingSet>> embeddings_;  // extractor key -> split

  static constexpr const char *kSplits[] = {"train", "adapt", "dev", "eval"};

  void say(const std::string &msg) const {
    if (log_) *log_ << "[fsv] " << msg << std::endl;
  }

  static std::string seconds_since(std::chrono::steady_clock::time_point t0) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << s << " s";
    return os.str();
  }

  template <typename Fn>
  auto stage(const std::string &name, const std::string &utt, Fn &&fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const StageError &) {
      throw;
    } catch (const std::exception &e) {
      throw StageError("stage '" + name + "'" + (utt.empty() ? "" : " utterance '" + utt + "'") +
                       ": " + e.what());
    }
  }

  void prepare_data() {
    DatasetPaths p{cfg_.data.train, cfg_.data.adapt, cfg_.data.dev,
                   cfg_.data.eval,  cfg_.data.dev_trials, cfg_.data.eval_trials};
    if (cfg_.data.synthetic) {
      auto t0 = std::chrono::steady_clock::now();
      p = stage("generate", "", [&] {
        return generate_synthetic(cfg_.data.generate, cfg_.seed, out_ / "data", cfg_.threads);
      });
      say("data ready (" + seconds_since(t0) + ")");
    }
    const std::string paths[] = {p.train, p.adapt, p.dev, p.eval};
    for (int i = 0; i < 4; ++i) {
      manifests_[kSplits[i]] = stage("manifest", "", [&] { return read_manifest(paths[i]); });
      auto &h = wav_hash_[kSplits[i]];
      for (const auto &e : manifests_[kSplits[i]]) h.push_back(stage("manifest", e.id, [&] { return hash_file(e.path); }));
    }
    dev_key_ = stage("trials", "", [&] { return read_trials(p.dev_trials); });
    eval_key_ = stage("trials", "", [&] { return read_trials(p.eval_trials); });
    for (auto *k : {&dev_key_, &eval_key_})
      if (!k->labelled()) throw StageError("stage 'trials': trial key has no tgt/imp labels");
  }

  std::string feature_stage_key(bool wpe) const {
    json j = config_to_json(cfg_)["features"];
    if (wpe) j["wpe"] = config_to_json(cfg_)["wpe"];
    return ContentHash().update(j.dump()).hex();
  }

  const SplitFeatures &features(const std::string &split, bool wpe) {
    auto it = features_.find({split, wpe});
    if (it != features_.end()) return it->second;
    auto t0 = std::chrono::steady_clock::now();
    const std::string skey = feature_stage_key(wpe);
    const FeatureConfig fc = cfg_.features.feature_config();
    SplitFeatures sf;
    const auto &m = manifests_.at(split);
    std::atomic<std::size_t> hits{0};
    sf.features.resize(m.size());
    sf.keys.resize(m.size());
    parallel_for(m.size(), cfg_.threads, [&](std::size_t i) {
      const std::string key = ContentHash().update(skey).update(wav_hash_.at(split)[i]).hex();
      const auto path = cache_.path("features", key, "fsv1");
      FeatureMatrix f;
      if (cache_.has(path)) {
        f = stage("features", m[i].id, [&] { return read_fsv1(path.string()); });
        ++hits;
      } else {
        f = stage(wpe ? "wpe+features" : "features", m[i].id, [&] {
          AudioBuffer a = read_wav(m[i].path);
          a.validate();
          if (wpe) a = wpe_dereverberate(a, cfg_.wpe);
          if (cfg_.features.resample) a = dsp::resample_to_8k(a);
          FeatureMatrix out = extract_features(a, fc);
          out.frames = round_f32(out.frames);
          return out;
        });
        cache_.store(path, [&](const std::string &tmp) { write_fsv1(tmp, f); });
      }
      sf.features[i] = std::move(f);
      sf.keys[i] = key;
    });
    say("features " + split + (wpe ? " (wpe)" : "") + ": " + std::to_string(m.size()) +
        " utterances, " + std::to_string(hits) + " cached (" + seconds_since(t0) + ")");
    return features_.emplace(std::pair{split, wpe}, std::move(sf)).first->second;
  }

  std::vector<int> train_labels(int *num_speakers) const {
    std::map<std::string, int> index;
    for (const auto &e : manifests_.at("train")) index.emplace(e.speaker, 0);
    int k = 0;
    for (auto &[name, id] : index) id = k++;
    std::vector<int> labels;
    for (const auto &e : manifests_.at("train")) labels.push_back(index.at(e.speaker));
    if (num_speakers) *num_speakers = k;
    return labels;
  }

  EmbeddingSet make_set(const std::string &split, const std::vector<Embedding> &embs) const {
    EmbeddingSet set;
    const auto &m = manifests_.at(split);
    for (std::size_t i = 0; i < embs.size(); ++i) set.append(m[i].id, embs[i]);
    set.data = round_f32(set.data);
    return set;
  }

  /// Loads or computes every split's embeddings for one extractor model.
  template <typename Extract>
  std::map<std::string, EmbeddingSet> embed_splits(const std::string &model_key, bool wpe,
                                                  const std::string &name, Extract &&extract) {
    std::map<std::string, EmbeddingSet> out;
    for (const char *split : kSplits) {
      // models see original audio; dereverberation is for the in-domain splits
      const bool dereverb = wpe && std::string(split) != "train";
      const auto &sf = features(split, dereverb);
      const std::string key = ContentHash().update(model_key).update(sf.combined_key()).hex();
      const auto path = cache_.path("embeddings", key, "fsve");
      if (cache_.has(path)) {
        out[split] = stage("embeddings", "", [&] { return read_embeddings(path.string()); });
        continue;
      }
      std::vector<Embedding> embs(sf.features.size());
      const auto &m = manifests_.at(split);
      parallel_for(embs.size(), cfg_.threads, [&](std::size_t i) {
        embs[i] = stage(name, m[i].id, [&] {
          Embedding e = extract(sf.features[i]);
          e.dereverberated = dereverb;
          return e;
        });
      });
      out[split] = make_set(split, embs);
      cache_.store(path, [&](const std::string &tmp) { write_embeddings(tmp, out[split]); });
    }
    return out;
  }

  std::map<std::string, EmbeddingSet> ivector_embeddings(bool wpe) {
    const auto &train = features("train", false);
    const json jc = config_to_json(cfg_)["ivector"];
    UbmConfig uc = cfg_.ivector.ubm;
    uc.seed = derive_seed(cfg_.seed, "ubm");
    TvConfig tc = cfg_.ivector.tv;
    tc.seed = derive_seed(cfg_.seed, "tv");
    const std::string ubm_key =
        ContentHash().update("ubm").update(jc["ubm"].dump()).update(jc["frame_stride"].dump())
            .update(uc.seed).update(train.combined_key()).hex();
    const std::string tv_key =
        ContentHash().update("tv").update(jc["tv"].dump()).update(tc.seed).update(ubm_key).hex();
    const auto tv_path = cache_.path("models", tv_key, "fsvm");
    ModelBundle bundle;
    if (cache_.has(tv_path)) {
      bundle = stage("ivector", "", [&] { return read_model(tv_path.string()); });
    } else {
      const auto ubm_path = cache_.path("models", ubm_key, "fsvm");
      auto t0 = std::chrono::steady_clock::now();
      if (cache_.has(ubm_path)) {
        bundle = stage("ubm", "", [&] { return read_model(ubm_path.string()); });
      } else {
        bundle.ubm = stage("ubm", "", [&] {
          Matrix all = stack_frames(train.features);
          const Index stride = cfg_.ivector.frame_stride;
          Matrix x((all.rows() + stride - 1) / stride, all.cols());
          for (Index i = 0; i < x.rows(); ++i) x.row(i) = all.row(i * stride);
          return ubm_train_em(x, uc).ubm;
        });
        cache_.store(ubm_path, [&](const std::string &tmp) { write_model(tmp, bundle); });
      }
      say("ubm ready (" + seconds_since(t0) + ")");
      t0 = std::chrono::steady_clock::now();
      bundle.tmatrix = stage("tv", "", [&] {
        std::vector<BwStats> stats;
        for (const auto &f : train.features) stats.push_back(accumulate_bw_stats(*bundle.ubm, f));
        return train_tmatrix_em(*bundle.ubm, stats, tc).model.t();
      });
      cache_.store(tv_path, [&](const std::string &tmp) { write_model(tmp, bundle); });
      say("total variability ready (" + seconds_since(t0) + ")");
    }
    const TotalVariabilityModel tv = bundle.tv_model();
    return embed_splits(tv_key, wpe, "ivector", [&](const FeatureMatrix &f) {
      return extract_ivector(tv, accumulate_bw_stats(tv.ubm(), f));
    });
  }

  std::map<std::string, EmbeddingSet> neural_embeddings(bool wpe, LossType loss) {
    const auto &train = features("train", false);
    json jc = config_to_json(cfg_)["embedder"];
    jc["loss"] = to_string(loss);
    const std::uint64_t seed = derive_seed(cfg_.seed, "embedder");
    const std::string key =
        ContentHash().update("embedder").update(jc.dump()).update(seed).update(train.combined_key()).hex();
    const auto path = cache_.path("models", key, "fsvm");
    ModelBundle bundle;
    if (cache_.has(path)) {
      bundle = stage("embedder", "", [&] { return read_model(path.string()); });
    } else {
      auto t0 = std::chrono::steady_clock::now();
      bundle.embedder = stage("embedder", "", [&] {
        std::vector<Matrix> frames;
        for (const auto &f : train.features) frames.push_back(f.frames);
        EmbedTrainConfig tc = cfg_.embedder.train;
        tc.seed = seed;
        return train_standardized(frames, train_labels(nullptr), cfg_.embedder.hidden,
                                  cfg_.embedder.embed_dim, cfg_.embedder.pooling, loss,
                                  cfg_.embedder.asoftmax, tc);
      });
      cache_.store(path, [&](const std::string &tmp) { write_model(tmp, bundle); });
      say(std::string("embedder ") + to_string(loss) + " trained (" +
          seconds_since(t0) + ")");
    }
    const ToyEmbedNet net = *bundle.embedder;
    return embed_splits(key, wpe, to_string(loss), [&](const FeatureMatrix &f) {
      return extract_embedding(net, f);
    });
  }

  const std::map<std::string, EmbeddingSet> &embeddings(const SystemSpec &sys) {
    const std::string k = sys.extractor + (sys.wpe ? "+wpe" : "");
    auto it = embeddings_.find(k);
    if (it != embeddings_.end()) return it->second;
    auto sets = sys.extractor == "ivector" ? ivector_embeddings(sys.wpe)
                                           : neural_embeddings(sys.wpe, parse_loss_type(sys.extractor));
    return embeddings_.emplace(k, std::move(sets)).first->second;
  }

  ScoreSet score_key(const TrialList &key, const EmbeddingSet &set, const PairScorer &scorer,
                     const std::string &split) {
    const auto idx = set.index();
    ScoreSet out;
    for (const auto &t : key.trials) {
      auto e = idx.find(t.enroll), s = idx.find(t.test);
      if (e == idx.end() || s == idx.end())
        throw StageError("stage 'scoring': utterance '" + (e == idx.end() ? t.enroll : t.test) +
                         "' of the " + split + " key is not in the " + split + " manifest");
      out.trials.push_back(t);
      out.scores.push_back(scorer(set.data.row(e->second).transpose(), set.data.row(s->second).transpose()));
    }
    return out;
  }

  std::pair<ScoreSet, ScoreSet> run_system(const SystemSpec &sys, SystemReport &rep) {
    rep.name = sys.name;
    rep.extractor = sys.extractor;
    rep.scoring = sys.scoring;
    rep.wpe = sys.wpe;
    const auto &sets = embeddings(sys);
    const auto dir = out_ / "systems" / sys.name;
    std::filesystem::create_directories(dir);
    for (const char *split : kSplits)
      write_embeddings((dir / (std::string(split) + ".fsve")).string(), sets.at(split));

    ModelBundle backend;
    Matrix train = sets.at("train").data;
    const Matrix &adapt = sets.at("adapt").data;
    if (cfg_.backend.coral) {
      backend.coral = stage("coral", "", [&] { return coral_fit(train, adapt, cfg_.backend.coral_ridge); });
      train = backend.coral->apply(train);
    }
    backend.whitener = stage("whiten", "", [&] {
      return Whitener::fit(cfg_.backend.whiten_source == "adapt" ? adapt : train);
    });
    auto process = [&](const EmbeddingSet &s) {
      EmbeddingSet p = s;
      p.data = whiten_and_lnorm_rows(*backend.whitener, s.data);
      return p;
    };
    const Matrix train_p = whiten_and_lnorm_rows(*backend.whitener, train);
    std::optional<PldaScorer> plda;
    if (sys.scoring == "plda") {
      backend.plda = stage("plda", "", [&] {
        PldaConfig pc;
        pc.rank = cfg_.backend.plda_rank;
        pc.iterations = cfg_.backend.plda_iterations;
        return plda_train_em(train_p, train_labels(nullptr), pc).model;
      });
      plda.emplace(*backend.plda);
    }
    write_model((dir / "backend.fsvm").string(), backend);
    const PairScorer scorer = [&](const Vector &e, const Vector &t) {
      return plda ? (*plda)(e, t) : cosine_score(e, t);
    };
    const EmbeddingSet cohort = process(sets.at("adapt"));
    auto score_split = [&](const std::string &split, const TrialList &key) {
      const EmbeddingSet s = process(sets.at(split));
      ScoreSet raw = stage("scoring", "", [&] { return score_key(key, s, scorer, split); });
      write_scores((dir / (split + "_raw.scores")).string(), raw);
      if (!cfg_.asnorm.enabled) return raw;
      AsNormReport ar;
      ScoreSet n = stage("asnorm", "", [&] {
        return normalize_trial_set(raw, s, s, cohort, scorer, cfg_.asnorm.top_x, &ar);
      });
      if (ar.clamped_utterances)
        say("warning: asnorm top_x clamped for " + std::to_string(ar.clamped_utterances) + " utterances");
      write_scores((dir / (split + ".scores")).string(), n);
      return n;
    };
    ScoreSet dev = score_split("dev", dev_key_);
    ScoreSet eval = score_split("eval", eval_key_);
    const auto fit = stage("calibrate", "", [&] {
      return calibrate_fit(label_scores(dev, dev_key_), cfg_.effective_prior());
    });
    rep.calibration = fit.params;
    rep.calibration_capped = fit.capped;
    rep.calibration_degenerate = fit.degenerate;
    write_calibration((dir / "calibration.json").string(), {{sys.name, fit.params}});
    write_scores((dir / "dev_calibrated.scores").string(), apply_calibration(dev, fit.params));
    write_scores((dir / "eval_calibrated.scores").string(), apply_calibration(eval, fit.params));
    return {dev, eval};
  }
};

}  // namespace detail

/// Runs every configured system end to end and writes report.json / report.txt
/// under cfg.output_dir. Progress goes to `log` when given.
inline ExperimentReport run_pipeline(const ExperimentConfig &cfg, std::ostream *log = nullptr) {
  auto violations = validate_config(cfg);
  if (!violations.empty()) throw ConfigError(join_violations(violations));
  detail::Runner runner(cfg, log);
  return runner.run();
}

}  // namespace fsv
