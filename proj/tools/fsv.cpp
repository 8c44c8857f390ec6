// tools/fsv.cpp

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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsv/pipeline.hpp"

namespace {

using namespace fsv;

// Feature manifests: `utt-id features.fsv1 speaker` per line.
struct FeatureList {
  Manifest manifest;
  std::vector<FeatureMatrix> features;
};

FeatureList load_feature_list(const std::string &path) {
  FeatureList out;
  out.manifest = read_manifest(path);
  if (out.manifest.empty()) throw ConfigError("empty manifest " + path);
  for (const auto &e : out.manifest) {
    try {
      out.features.push_back(read_fsv1(e.path));
    } catch (const Error &err) {
      throw FormatError(e.id + ": " + err.what());
    }
  }
  return out;
}

std::vector<int> speaker_labels(const Manifest &m) {
  std::map<std::string, int> index;
  for (const auto &e : m) index.emplace(e.speaker, 0);
  int k = 0;
  for (auto &[name, id] : index) id = k++;
  std::vector<int> labels;
  for (const auto &e : m) labels.push_back(index.at(e.speaker));
  return labels;
}

LabeledScores labelled(const std::string &scores, const std::string &key) {
  return label_scores(read_scores(scores), read_trials(key));
}

std::string stem(const std::string &path) { return std::filesystem::path(path).stem().string(); }

void print_metrics(const std::string &name, const LabeledScores &s, const DcfParams &p) {
  const SplitMetrics m = compute_metrics(s, p);
  std::cout << std::fixed << std::setprecision(4) << name << "\tminC " << m.min_c << "\tactC "
            << m.act_c << "\tEER% " << std::setprecision(2) << 100.0 * m.eer << "\tCllr "
            << std::setprecision(4) << m.cllr << '\n';
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"far-field speaker verification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fsv 1.0.0");

  // extract
  auto *extract = app.add_subcommand("extract", "wav -> FSV1 feature archive");
  std::string kind = "mfcc20", in, out;
  bool cms = false, resample = false;
  extract->add_option("--kind", kind, "mfcc20|mfcc30|pncc|mfbank8k|mfbank16k|gfbank")
      ->capture_default_str();
  extract->add_option("--in", in, "input wav")->required();
  extract->add_option("--out", out, "output fsv1")->required();
  extract->add_flag("--cms", cms, "sliding cepstral mean subtraction (3 s)");
  extract->add_flag("--resample", resample, "resample 16 kHz input to 8 kHz first");

  // wpe
  auto *wpe = app.add_subcommand("wpe", "dereverberate a wav");
  WpeConfig wc;
  wpe->add_option("--in", in)->required();
  wpe->add_option("--out", out)->required();
  wpe->add_option("--taps", wc.taps)->capture_default_str();
  wpe->add_option("--delay", wc.delay)->capture_default_str();
  wpe->add_option("--iters", wc.iterations)->capture_default_str();

  // i-vector extractor
  std::string manifest, model;
  auto *tubm = app.add_subcommand("train-ubm", "full-covariance GMM-UBM from a feature manifest");
  UbmConfig uc;
  Index stride = 1;
  tubm->add_option("--manifest", manifest, "lines: utt-id fsv1-path speaker")->required();
  tubm->add_option("--components", uc.components)->capture_default_str();
  tubm->add_option("--iters", uc.iterations)->capture_default_str();
  tubm->add_option("--frame-stride", stride, "use every n-th frame")->capture_default_str();
  tubm->add_option("--seed", uc.seed)->capture_default_str();
  tubm->add_option("--out", out, "FSVM model")->required();

  auto *ttv = app.add_subcommand("train-tv", "total variability matrix on top of a UBM");
  TvConfig tc;
  ttv->add_option("--manifest", manifest)->required();
  ttv->add_option("--ubm", model, "FSVM model holding the UBM")->required();
  ttv->add_option("--rank", tc.rank)->capture_default_str();
  ttv->add_option("--iters", tc.iterations)->capture_default_str();
  ttv->add_option("--seed", tc.seed)->capture_default_str();
  ttv->add_option("--out", out, "FSVM model (UBM + T)")->required();

  auto *xiv = app.add_subcommand("extract-ivector", "i-vectors for a feature manifest");
  xiv->add_option("--model", model, "FSVM model with UBM and T")->required();
  xiv->add_option("--manifest", manifest)->required();
  xiv->add_option("--out", out, "FSVE embedding archive")->required();

  // neural embedder
  auto *temb = app.add_subcommand("train-embedder", "toy x-vector style embedder");
  std::string loss = "asoftmax", pooling = "mean_std";
  Index hidden = 64, embed_dim = 32;
  AsoftmaxConfig ac;
  EmbedTrainConfig ec{.steps = 1500, .batch_size = 16, .learning_rate = 0.05,
                      .segment_frames = 100, .seed = 0};
  temb->add_option("--manifest", manifest)->required();
  temb->add_option("--loss", loss, "softmax|asoftmax")->capture_default_str();
  temb->add_option("--pooling", pooling, "mean|mean_std")->capture_default_str();
  temb->add_option("--hidden", hidden)->capture_default_str();
  temb->add_option("--embed-dim", embed_dim)->capture_default_str();
  temb->add_option("--margin", ac.margin)->capture_default_str();
  temb->add_option("--steps", ec.steps)->capture_default_str();
  temb->add_option("--batch", ec.batch_size)->capture_default_str();
  temb->add_option("--lr", ec.learning_rate)->capture_default_str();
  temb->add_option("--segment", ec.segment_frames, "training crop in frames, 0 = whole")
      ->capture_default_str();
  temb->add_option("--seed", ec.seed)->capture_default_str();
  temb->add_option("--out", out, "FSVM model")->required();

  auto *xemb = app.add_subcommand("extract-embedding", "neural embeddings for a feature manifest");
  xemb->add_option("--model", model)->required();
  xemb->add_option("--manifest", manifest)->required();
  xemb->add_option("--out", out, "FSVE embedding archive")->required();

  // scoring
  std::vector<std::string> score_files, cohort_files, names;
  std::string key, params;
  int top_x = kDefaultTopX;
  auto *asn = app.add_subcommand("asnorm", "adaptive symmetric score normalisation");
  asn->add_option("--scores", in, "lines: enroll test score")->required();
  asn->add_option("--cohort-scores", cohort_files, "enroll and test cohort archives")
      ->required()
      ->expected(2);
  asn->add_option("--top-x", top_x)->capture_default_str();
  asn->add_option("--out", out)->required();

  auto *cal = app.add_subcommand("calibrate", "fit a*s+b on a labelled score file");
  double prior = 0.01;
  std::string name;
  cal->add_option("--scores", in)->required();
  cal->add_option("--key", key, "lines: enroll test tgt|imp")->required();
  cal->add_option("--prior", prior)->capture_default_str();
  cal->add_option("--name", name, "subsystem id (default: score file stem)");
  cal->add_option("--params", params, "JSON table to create or update");
  cal->add_option("--out", out, "calibrated scores");

  auto *fus = app.add_subcommand("fuse", "equal-weight fusion of calibrated subsystems");
  fus->add_option("--scores", score_files)->required();
  fus->add_option("--params", params)->required();
  fus->add_option("--names", names, "subsystem ids (default: score file stems)");
  fus->add_option("--out", out)->required();

  auto *ev = app.add_subcommand("eval", "minC, actC, EER and Cllr");
  DcfParams dcf;
  std::string det_svg, det_table;
  ev->add_option("--scores", score_files)->required();
  ev->add_option("--key", key)->required();
  ev->add_option("--p-target", dcf.p_target)->capture_default_str();
  ev->add_option("--c-miss", dcf.c_miss)->capture_default_str();
  ev->add_option("--c-fa", dcf.c_fa)->capture_default_str();
  ev->add_option("--det", det_svg, "DET plot (svg)");
  ev->add_option("--det-table", det_table, "DET points, tab separated");

  // augmentation
  auto *rir = app.add_subcommand("simulate-rir", "image-source room impulse response");
  rir->add_option("--room", in, "room JSON")->required();
  rir->add_option("--out", out)->required();

  auto *aug = app.add_subcommand("augment", "reverberate and/or add noise");
  std::string rir_path, noise_path;
  double snr = 10.0;
  std::uint64_t seed = 0;
  aug->add_option("--in", in)->required();
  aug->add_option("--rir", rir_path);
  aug->add_option("--noise", noise_path);
  aug->add_option("--snr", snr)->capture_default_str();
  aug->add_option("--seed", seed)->capture_default_str();
  aug->add_option("--out", out)->required();

  // experiments
  auto *run = app.add_subcommand("run", "run an experiment config end to end");
  bool quiet = false;
  std::string config;
  run->add_option("--config", config)->required();
  run->add_flag("--quiet", quiet);

  auto *init = app.add_subcommand("init-config", "print the annotated reference config");
  init->add_option("--out", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extract) {
      FeatureConfig fc = FeatureConfig::preset(parse_feature_kind(kind));
      fc.cms = cms;
      AudioBuffer a = read_wav(in);
      a.validate();
      if (resample) a = dsp::resample_to_8k(a);
      const FeatureMatrix f = extract_features(a, fc);
      write_fsv1(out, f);
      std::cerr << "extract: " << f.num_frames() << " x " << f.dim() << '\n';
    } else if (*wpe) {
      AudioBuffer a = read_wav(in);
      a.validate();
      const WpeOutput r = wpe_dereverberate_traced(a, wc);
      write_wav(out, r.audio);
      std::cerr << "wpe: objective";
      for (double v : r.objective) std::cerr << ' ' << v;
      std::cerr << '\n';
    } else if (*tubm) {
      require(stride >= 1, "frame stride must be >= 1");
      const FeatureList fl = load_feature_list(manifest);
      const Matrix all = detail::stack_frames(fl.features);
      Matrix x((all.rows() + stride - 1) / stride, all.cols());
      for (Index i = 0; i < x.rows(); ++i) x.row(i) = all.row(i * stride);
      const UbmTrainResult r = ubm_train_em(x, uc);
      ModelBundle b;
      b.ubm = r.ubm;
      write_model(out, b);
      std::cerr << "train-ubm: " << x.rows() << " frames, log-likelihood "
                << r.log_likelihood.front() << " -> " << r.log_likelihood.back() << '\n';
    } else if (*ttv) {
      ModelBundle b = read_model(model);
      if (!b.ubm) throw FormatError(model + ": no UBM section");
      const FeatureList fl = load_feature_list(manifest);
      std::vector<BwStats> stats;
      for (const auto &f : fl.features) stats.push_back(accumulate_bw_stats(*b.ubm, f));
      const TvTrainResult r = train_tmatrix_em(*b.ubm, stats, tc);
      b.tmatrix = r.model.t();
      write_model(out, b);
      std::cerr << "train-tv: rank " << tc.rank << ", " << stats.size() << " utterances\n";
    } else if (*xiv) {
      const TotalVariabilityModel tv = read_model(model).tv_model();
      const FeatureList fl = load_feature_list(manifest);
      EmbeddingSet set;
      for (std::size_t i = 0; i < fl.features.size(); ++i)
        set.append(fl.manifest[i].id, extract_ivector(tv, accumulate_bw_stats(tv.ubm(), fl.features[i])));
      write_embeddings(out, set);
    } else if (*temb) {
      const FeatureList fl = load_feature_list(manifest);
      std::vector<Matrix> frames;
      for (const auto &f : fl.features) frames.push_back(f.frames);
      ModelBundle b;
      b.embedder = train_standardized(frames, speaker_labels(fl.manifest), hidden, embed_dim,
                                      parse_pooling(pooling), parse_loss_type(loss), ac, ec);
      write_model(out, b);
      std::cerr << "train-embedder: " << loss << ", " << b.embedder->num_speakers()
                << " speakers\n";
    } else if (*xemb) {
      const ModelBundle b = read_model(model);
      if (!b.embedder) throw FormatError(model + ": no embedder section");
      const FeatureList fl = load_feature_list(manifest);
      EmbeddingSet set;
      for (std::size_t i = 0; i < fl.features.size(); ++i)
        set.append(fl.manifest[i].id, extract_embedding(*b.embedder, fl.features[i]));
      write_embeddings(out, set);
    } else if (*asn) {
      AsNormReport rep;
      const ScoreSet s = normalize_trial_set(read_scores(in), read_cohort_scores(cohort_files[0]),
                                             read_cohort_scores(cohort_files[1]), top_x, &rep);
      write_scores(out, s);
      if (rep.clamped_utterances > 0)
        std::cerr << "asnorm: warning: " << rep.clamped_utterances
                  << " cohort lists are shorter than " << top_x << "; using all their scores\n";
    } else if (*cal) {
      const LabeledScores s = labelled(in, key);
      const CalibrationFit fit = calibrate_fit(s, prior);
      if (name.empty()) name = stem(in);
      std::cout << std::setprecision(10) << name << "\ta " << fit.params.a << "\tb " << fit.params.b
                << "\tCllr " << cllr(s) << " -> " << cllr(apply_calibration(s, fit.params));
      if (fit.capped) std::cout << "\t(scale capped: separable scores)";
      if (fit.degenerate) std::cout << "\t(degenerate: scores carry no usable evidence)";
      std::cout << '\n';
      if (!params.empty()) {
        CalibrationTable t;
        if (std::filesystem::exists(params)) t = read_calibration(params);
        t[name] = fit.params;
        write_calibration(params, t);
      }
      if (!out.empty()) write_scores(out, apply_calibration(read_scores(in), fit.params));
    } else if (*fus) {
      const CalibrationTable t = read_calibration(params);
      if (names.empty())
        for (const auto &f : score_files) names.push_back(stem(f));
      if (names.size() != score_files.size())
        throw ConfigError("fuse: need one name per score file");
      std::vector<ScoreSet> systems;
      std::vector<CalibrationParams> ps;
      for (std::size_t i = 0; i < score_files.size(); ++i) {
        auto it = t.find(names[i]);
        if (it == t.end()) throw ConfigError("fuse: no calibration for '" + names[i] + "' in " + params);
        systems.push_back(read_scores(score_files[i]));
        ps.push_back(it->second);
      }
      write_scores(out, fuse(systems, ps));
    } else if (*ev) {
      dcf.validate();
      const TrialList k = read_trials(key);
      std::vector<DetCurve> curves;
      for (const auto &f : score_files) {
        const LabeledScores s = label_scores(read_scores(f), k);
        print_metrics(stem(f), s, dcf);
        curves.push_back({stem(f), det_points(s)});
      }
      if (!det_svg.empty()) write_det_svg(det_svg, curves);
      if (!det_table.empty()) {
        std::ofstream os(det_table);
        if (!os) throw FormatError("cannot write " + det_table);
        for (const auto &c : curves) {
          os << "# " << c.label << '\n';
          write_det_table(os, c.points);
        }
      }
    } else if (*rir) {
      const AudioBuffer h = ism_rir(read_room_spec(in));
      write_wav(out, h);
      std::cerr << "simulate-rir: " << h.size() << " samples\n";
    } else if (*aug) {
      if (rir_path.empty() && noise_path.empty())
        throw ConfigError("augment: give --rir, --noise or both");
      AudioBuffer a = read_wav(in);
      a.validate();
      if (!rir_path.empty()) {
        AudioBuffer r = convolve_rir(a, read_wav(rir_path));
        r.samples.resize(a.samples.size());
        a = std::move(r);
      }
      if (!noise_path.empty()) a = mix_at_snr(a, read_wav(noise_path), snr, seed);
      write_wav(out, a);
    } else if (*run) {
      const ExperimentConfig cfg = load_config(config);
      const ExperimentReport r = run_pipeline(cfg, quiet ? nullptr : &std::cerr);
      std::cout << report_table(r);
    } else if (*init) {
      const std::string doc = config_to_json(ExperimentConfig{}, true).dump(2) + "\n";
      if (out.empty()) {
        std::cout << doc;
      } else {
        std::ofstream os(out);
        if (!os) throw FormatError("cannot write " + out);
        os << doc;
      }
    }
  } catch (const Error &e) {
    std::cerr << "fsv " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
