// fsv/dataset.hpp

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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fsv/audio.hpp"
#include "fsv/augment.hpp"
#include "fsv/cache.hpp"
#include "fsv/config.hpp"
#include "fsv/parallel.hpp"
#include "fsv/synth.hpp"
#include "fsv/trials.hpp"

namespace fsv {

struct ManifestEntry {
  std::string id;
  std::string path;  // resolved wav path
  std::string speaker;
};

using Manifest = std::vector<ManifestEntry>;

/// Lines `utt-id wav-path speaker`; relative wav paths are taken relative to
/// the manifest's directory.
inline Manifest read_manifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open manifest " + path);
  const auto base = std::filesystem::path(path).parent_path();
  Manifest m;
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string extra;
    if (!(ls >> e.id)) continue;
    if (!(ls >> e.path >> e.speaker) || (ls >> extra))
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'utt-id wav-path speaker'");
    if (!ids.insert(e.id).second)
      throw FormatError(path + ":" + std::to_string(lineno) + ": duplicate utterance " + e.id);
    if (std::filesystem::path(e.path).is_relative()) e.path = (base / e.path).string();
    m.push_back(std::move(e));
  }
  if (m.empty()) throw FormatError("manifest " + path + " is empty");
  return m;
}

/// Paths are written relative to the manifest's directory when possible.
inline void write_manifest(const std::string &path, const Manifest &m) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path);
  const auto base = std::filesystem::path(path).parent_path();
  for (const auto &e : m) {
    auto rel = std::filesystem::path(e.path).lexically_relative(base);
    os << e.id << ' ' << (rel.empty() ? e.path : rel.generic_string()) << ' ' << e.speaker << '\n';
  }
}

struct DatasetPaths {
  std::string train, adapt, dev, eval, dev_trials, eval_trials;
};

/// Random shoebox room at the requested reverberation time; source and mic
/// at least 1 m apart and 0.5 m from every wall.
inline RoomSpec random_room(Rng &rng, double t60, int sample_rate, int max_order) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RoomSpec room;
  room.dimensions = {4.0 + 4.0 * u(rng), 3.0 + 3.0 * u(rng), 2.5 + 1.0 * u(rng)};
  room.sample_rate = sample_rate;
  room.max_order = max_order;
  room.set_absorption(absorption_for_t60(room, t60));
  auto place = [&] {
    Point3 p;
    for (int a = 0; a < 3; ++a) p[a] = 0.5 + (room.dimensions[a] - 1.0) * u(rng);
    return p;
  };
  for (int attempt = 0;; ++attempt) {
    room.source = place();
    room.mic = place();
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) d2 += std::pow(room.source[a] - room.mic[a], 2);
    if (d2 >= 1.0 || attempt > 100) break;
  }
  return room;
}

/// Scales to an RMS of `target` without letting the peak pass 0.95.
inline void normalize_level(AudioBuffer &a, double target = 0.1) {
  const double r = rms(a.samples);
  double peak = 0.0;
  for (double v : a.samples) peak = std::max(peak, std::abs(v));
  if (r <= 0.0) return;
  const double g = std::min(target / r, 0.95 / peak);
  for (double &v : a.samples) v *= g;
}

/// Reverberates with a random ISM room, then adds pink noise at `snr_db`.
inline AudioBuffer far_field(const AudioBuffer &clean, double t60, double snr_db, int max_order,
                             Rng &rng) {
  const RoomSpec room = random_room(rng, t60, clean.sample_rate, max_order);
  AudioBuffer wet = convolve_rir(clean, ism_rir(room));
  wet.samples.resize(clean.samples.size());
  AudioBuffer noise;
  noise.sample_rate = clean.sample_rate;
  noise.samples = synth::colored_noise(clean.samples.size(), synth::NoiseColor::pink, rng);
  AudioBuffer out = mix_at_snr(wet, noise, snr_db, rng());
  normalize_level(out);
  return out;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return ContentHash().update(seed).update(tag).value();
}

/// All within-split pairs (i < j); same speaker = target.
inline TrialList all_pairs_key(const Manifest &m) {
  TrialList key;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      key.trials.push_back({m[i].id, m[j].id});
      key.labels.push_back(m[i].speaker == m[j].speaker ? TrialLabel::target : TrialLabel::impostor);
    }
  return key;
}

/// Writes wavs, manifests and keys under `dir`; reuses a previous complete
/// generation with identical parameters.
inline DatasetPaths generate_synthetic(const SyntheticSpec &spec, std::uint64_t seed,
                                       const std::filesystem::path &dir, unsigned threads = 0) {
  namespace fs = std::filesystem;
  DatasetPaths p;
  p.train = (dir / "train.lst").string();
  p.adapt = (dir / "adapt.lst").string();
  p.dev = (dir / "dev.lst").string();
  p.eval = (dir / "eval.lst").string();
  p.dev_trials = (dir / "dev.key").string();
  p.eval_trials = (dir / "eval.key").string();

  ExperimentConfig probe;
  probe.data.generate = spec;
  const std::string stamp =
      ContentHash().update(seed).update(config_to_json(probe)["data"]["generate"].dump()).hex();
  const auto marker = dir / "COMPLETE";
  if (fs::is_regular_file(marker)) {
    std::ifstream is(marker);
    std::string got;
    is >> got;
    if (got == stamp) return p;
  }
  fs::create_directories(dir / "wav");
  fs::remove(marker);

  Rng spk_rng(derive_seed(seed, "speakers"));
  std::vector<synth::SpeakerTraits> speakers;
  for (int s = 0; s < spec.speakers; ++s) speakers.push_back(synth::sample_speaker(spk_rng));
  auto spk_name = [](int s) {
    std::ostringstream os;
    os << "spk" << std::setw(2) << std::setfill('0') << s;
    return os.str();
  };
  struct Job {
    Manifest *m;
    int s;
    std::string id;
    bool reverberant;
  };
  std::vector<Job> jobs;
  Manifest train, adapt, dev, eval;
  auto add = [&](Manifest &m, int s, const std::string &tag, int k, bool reverberant) {
    std::ostringstream id;
    id << spk_name(s) << '-' << tag << std::setw(2) << std::setfill('0') << k;
    jobs.push_back({&m, s, id.str(), reverberant});
  };
  int s = 0;
  for (int i = 0; i < spec.train_speakers; ++i, ++s) {
    for (int k = 0; k < spec.train_utterances; ++k) {
      add(train, s, "clean", k, false);
      if (spec.augment_training) add(train, s, "aug", k, true);
    }
    for (int k = 0; k < spec.adapt_utterances; ++k) add(adapt, s, "adapt", k, true);
  }
  for (int i = 0; i < spec.dev_speakers; ++i, ++s)
    for (int k = 0; k < spec.trial_utterances; ++k) add(dev, s, "dev", k, true);
  for (int i = 0; i < spec.eval_speakers; ++i, ++s)
    for (int k = 0; k < spec.trial_utterances; ++k) add(eval, s, "eval", k, true);

  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const Job &job = jobs[j];
    Rng rng(derive_seed(seed, job.id));
    AudioBuffer a = synth::synthesize_utterance(speakers[job.s], spec.seconds, spec.sample_rate, rng);
    if (job.reverberant) a = far_field(a, spec.t60, spec.snr_db, spec.max_order, rng);
    else normalize_level(a);
    write_wav((dir / "wav" / (job.id + ".wav")).string(), a);
  });
  for (const auto &job : jobs)
    job.m->push_back({job.id, (dir / "wav" / (job.id + ".wav")).string(), spk_name(job.s)});

  write_manifest(p.train, train);
  write_manifest(p.adapt, adapt);
  write_manifest(p.dev, dev);
  write_manifest(p.eval, eval);
  write_trials(p.dev_trials, all_pairs_key(dev));
  write_trials(p.eval_trials, all_pairs_key(eval));
  std::ofstream(marker) << stamp << '\n';
  return p;
}

}  // namespace fsv
