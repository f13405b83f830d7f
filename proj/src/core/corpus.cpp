// core/corpus.cpp

// Copyright 2026  The ufema authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace ufema {

void SpeakerSpec::validate() const {
  require_arg(fundamental_hz > 0, "fundamental_hz must be positive");
  require_arg(!formants.empty(), "formant profile must be non-empty");
  for (size_t i = 1; i < formants.size(); ++i)
    require_arg(formants[i].center_hz > formants[i - 1].center_hz,
                "formant centers must be strictly increasing");
}

void NoiseCondition::validate() const {
  if (kind == NoiseKind::kClean)
    require_arg(!snr_db.has_value(), "clean condition carries no SNR");
  else
    require_arg(snr_db.has_value(), "noisy condition requires an SNR");
}

const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::kClean: return "clean";
    case NoiseKind::kNoise: return "noise";
    case NoiseKind::kMusic: return "music";
    case NoiseKind::kBabble: return "babble";
  }
  return "?";
}

NoiseKind noise_kind_from_name(const std::string& s) {
  if (s == "clean") return NoiseKind::kClean;
  if (s == "noise") return NoiseKind::kNoise;
  if (s == "music") return NoiseKind::kMusic;
  if (s == "babble") return NoiseKind::kBabble;
  throw Error(ErrorCode::kInvalidArgument, "unknown noise kind: " + s);
}

std::string NoiseCondition::descriptor() const {
  if (kind == NoiseKind::kClean) return "clean";
  std::ostringstream os;
  os << noise_kind_name(kind) << "@" << *snr_db;
  return os.str();
}

NoiseCondition NoiseCondition::parse(const std::string& d, Pool pool) {
  NoiseCondition c;
  c.pool = pool;
  auto at = d.find('@');
  if (at == std::string::npos) {
    c.kind = noise_kind_from_name(d);
    require_arg(c.kind == NoiseKind::kClean,
                "condition '" + d + "' requires an SNR, e.g. " + d + "@0");
    return c;
  }
  c.kind = noise_kind_from_name(d.substr(0, at));
  require_arg(c.kind != NoiseKind::kClean, "clean condition takes no SNR");
  try {
    size_t used = 0;
    c.snr_db = std::stod(d.substr(at + 1), &used);
    require_arg(used == d.size() - at - 1, "trailing junk in SNR");
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad condition descriptor: " + d);
  }
  return c;
}

uint64_t NoisePoolRegistry::seed_for(Pool pool, NoiseKind kind, uint64_t index) {
  require_arg(kind != NoiseKind::kClean, "clean condition draws no noise");
  require_arg(index < kPoolSpan, "noise index out of range");
  const uint64_t base = pool == Pool::kTrain ? 0 : kPoolSpan;
  const uint64_t seed = base + index;
  auto& dst = pool == Pool::kTrain ? train_ : test_;
  dst.insert({static_cast<int>(kind), seed});
  return seed;
}

void NoisePoolRegistry::verify_disjoint() const {
  std::vector<std::pair<int, uint64_t>> overlap;
  std::set_intersection(train_.begin(), train_.end(), test_.begin(), test_.end(),
                        std::back_inserter(overlap));
  require(overlap.empty(), ErrorCode::kPoolViolation,
          "train/test noise pools intersect");
}

namespace {

// Radical inverse (van der Corput) of i in the given base, in [0, 1).
double radical_inverse(uint64_t i, uint64_t base) {
  const double inv = 1.0 / double(base);
  double f = inv, v = 0.0;
  while (i > 0) {
    v += f * double(i % base);
    i /= base;
    f *= inv;
  }
  return v;
}

// Piecewise-linear random contour with nodes every node_s seconds.
std::vector<double> random_contour(Rng* rng, size_t n, int sample_rate,
                                   double node_s, double lo, double hi) {
  const size_t node_step = std::max<size_t>(1, size_t(node_s * sample_rate));
  const size_t n_nodes = n / node_step + 2;
  std::vector<double> nodes(n_nodes);
  for (auto& v : nodes) v = rng->uniform(lo, hi);
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t k = i / node_step;
    const double frac = double(i % node_step) / node_step;
    out[i] = nodes[k] * (1.0 - frac) + nodes[k + 1] * frac;
  }
  return out;
}

// Two-pole resonator at (center_hz, bandwidth_hz); applied in parallel per
// formant, classic formant-synthesis style.
std::vector<double> resonate(const std::vector<double>& x, double center_hz,
                             double bandwidth_hz, int sample_rate) {
  const double r = std::exp(-M_PI * bandwidth_hz / sample_rate);
  const double theta = 2.0 * M_PI * center_hz / sample_rate;
  const double a1 = -2.0 * r * std::cos(theta);
  const double a2 = r * r;
  const double b0 = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  std::vector<double> y(x.size());
  double y1 = 0.0, y2 = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double v = b0 * x[i] - a1 * y1 - a2 * y2;
    y[i] = v;
    y2 = y1;
    y1 = v;
  }
  return y;
}

}  // namespace

SpeakerSpec make_speaker_spec(int speaker_id, uint64_t corpus_seed) {
  Rng rng(mix_seed(corpus_seed, 0x5350u /*"SP"*/ + uint64_t(speaker_id) * 2654435761u));
  SpeakerSpec spec;
  spec.speaker_id = speaker_id;
  spec.seed = mix_seed(corpus_seed, uint64_t(speaker_id));
  // Pitch (log scale) and the first two formants are stratified on a Halton
  // layout (bases 2/3/5) indexed by speaker id: two ids that land close in
  // pitch are pushed apart in formant space by construction, which
  // independent uniform draws cannot guarantee. Small seeded jitter keeps
  // the corpus seed meaningful.
  const uint64_t k = uint64_t(speaker_id) + 1;
  spec.fundamental_hz = 90.0 * std::pow(250.0 / 90.0, radical_inverse(k, 2)) *
                        rng.uniform(0.98, 1.02);
  const double f1 =
      (300.0 + 550.0 * radical_inverse(k, 3)) * rng.uniform(0.97, 1.03);
  const double f2 =
      f1 + (350.0 + 1100.0 * radical_inverse(k, 5)) * rng.uniform(0.97, 1.03);
  const double f3 = f2 + rng.uniform(500.0, 1200.0);
  spec.formants = {
      {f1, rng.uniform(60.0, 110.0), rng.uniform(0.8, 1.3)},
      {f2, rng.uniform(80.0, 140.0), rng.uniform(0.6, 1.1)},
      {f3, rng.uniform(100.0, 180.0), rng.uniform(0.3, 0.8)},
  };
  spec.validate();
  return spec;
}

Waveform synth_utterance(const SpeakerSpec& spec, double duration_s,
                         uint64_t utterance_seed, int sample_rate) {
  spec.validate();
  require_arg(duration_s > 0, "duration must be positive");
  const size_t n = static_cast<size_t>(std::llround(duration_s * sample_rate));
  require_arg(n > 0, "duration too short for one sample");

  Rng rng(mix_seed(spec.seed, utterance_seed));

  // Pitch contour with mild per-utterance jitter, then phase integration.
  auto f0 = random_contour(&rng, n, sample_rate, 0.25,
                           spec.fundamental_hz * 0.94, spec.fundamental_hz * 1.06);
  // Syllable-like amplitude modulation.
  auto env = random_contour(&rng, n, sample_rate, 0.15, 0.35, 1.0);

  const int n_harm = std::max(3, static_cast<int>(4000.0 / spec.fundamental_hz));
  std::vector<double> src(n);
  double phase = 0.0;
  for (size_t i = 0; i < n; ++i) {
    phase += 2.0 * M_PI * f0[i] / sample_rate;
    double s = 0.0;
    for (int h = 1; h <= n_harm; ++h) s += std::sin(h * phase) / h;
    src[i] = s * env[i];
  }
  // Light aspiration so the spectrum has a broadband floor.
  for (size_t i = 0; i < n; ++i) src[i] += 0.02 * rng.normal();

  std::vector<double> mixed(n, 0.0);
  for (const auto& fm : spec.formants) {
    auto band = resonate(src, fm.center_hz, fm.bandwidth_hz, sample_rate);
    for (size_t i = 0; i < n; ++i) mixed[i] += fm.gain * band[i];
  }

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) w.samples[i] = static_cast<float>(mixed[i]);
  peak_normalize(&w, 0.9f);
  return w;
}

std::vector<Waveform> babble_components(double duration_s, uint64_t seed,
                                        int sample_rate) {
  constexpr int kVoices = 4;
  // Babble voices live far outside any corpus speaker-id range so the
  // "wrong speaker" failure mode uses genuinely held-out voices.
  constexpr int kBabbleIdBase = 1 << 20;
  std::vector<Waveform> voices;
  voices.reserve(kVoices);
  for (int v = 0; v < kVoices; ++v) {
    const auto spec = make_speaker_spec(
        kBabbleIdBase + static_cast<int>(mix_seed(seed, v) % 4096), 0x42414242u);
    voices.push_back(synth_utterance(spec, duration_s, mix_seed(seed, 1000 + v),
                                     sample_rate));
  }
  return voices;
}

Waveform synth_noise(NoiseKind kind, double duration_s, uint64_t seed,
                     int sample_rate) {
  require_arg(duration_s > 0, "duration must be positive");
  const size_t n = static_cast<size_t>(std::llround(duration_s * sample_rate));
  Waveform w;
  w.sample_rate = sample_rate;

  switch (kind) {
    case NoiseKind::kNoise: {
      // Wideband stochastic signal with a mild random tilt.
      Rng rng(mix_seed(0x4e4f4953u, seed));
      const double c = rng.uniform(0.1, 0.35);
      w.samples.resize(n);
      double prev = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        prev = (1.0 - c) * x + c * prev;
        w.samples[i] = static_cast<float>(prev);
      }
      break;
    }
    case NoiseKind::kMusic: {
      // Slowly-changing harmonic chords, 0.5 s per chord with short
      // crossfades.
      Rng rng(mix_seed(0x4d555349u, seed));
      const size_t seg = size_t(0.5 * sample_rate);
      const size_t fade = size_t(0.05 * sample_rate);
      const size_t n_segs = n / seg + 2;
      std::vector<double> out(n, 0.0);
      std::vector<double> roots(n_segs);
      for (auto& r : roots) r = 110.0 * std::pow(2.0, rng.uniform(0.0, 2.0));
      std::vector<double> phases(3 * 5);
      for (auto& p : phases) p = rng.uniform(0.0, 2.0 * M_PI);
      const double intervals[3] = {1.0, std::pow(2.0, 4.0 / 12), std::pow(2.0, 7.0 / 12)};
      for (size_t i = 0; i < n; ++i) {
        const size_t k = i / seg;
        const size_t in_seg = i % seg;
        for (size_t which = 0; which < 2; ++which) {
          const size_t kk = k + which;
          double gain = 1.0;
          if (which == 0)
            gain = in_seg >= seg - fade ? double(seg - in_seg) / fade : 1.0;
          else
            gain = in_seg >= seg - fade ? double(in_seg - (seg - fade)) / fade : 0.0;
          if (gain <= 0.0) continue;
          double s = 0.0;
          for (int note = 0; note < 3; ++note) {
            const double f = roots[kk] * intervals[note];
            for (int h = 1; h <= 5; ++h) {
              if (f * h > sample_rate / 2.0) break;
              s += std::sin(2.0 * M_PI * f * h * i / sample_rate +
                            phases[note * 5 + h - 1]) / (h * h);
            }
          }
          out[i] += gain * s;
        }
      }
      w.samples.assign(out.begin(), out.end());
      break;
    }
    case NoiseKind::kBabble: {
      auto voices = babble_components(duration_s, seed, sample_rate);
      w.samples.assign(n, 0.f);
      for (const auto& v : voices)
        for (size_t i = 0; i < n; ++i) w.samples[i] += v.samples[i];
      break;
    }
    case NoiseKind::kClean:
      throw Error(ErrorCode::kInvalidArgument, "cannot synthesize 'clean' noise");
  }
  peak_normalize(&w, 0.9f);
  return w;
}

Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  clean.validate();
  noise.validate();
  require_arg(clean.sample_rate == noise.sample_rate, "sample rate mismatch");
  require_arg(noise.size() >= clean.size(),
              "noise must be at least as long as clean (cropped, never looped)");
  const size_t n = clean.size();
  const double p_clean = mean_square_power(clean.samples, n);
  const double p_noise = mean_square_power(noise.samples, n);
  require(p_clean > 0.0, ErrorCode::kDegenerateInput, "clean signal has zero power");
  require(p_noise > 0.0, ErrorCode::kDegenerateInput, "noise signal has zero power");

  const double g = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  Waveform out;
  out.sample_rate = clean.sample_rate;
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i)
    out.samples[i] = clean.samples[i] + static_cast<float>(g) * noise.samples[i];
  return out;
}

size_t truncate_offset(size_t input_len, size_t crop_len, uint64_t seed) {
  require_arg(input_len >= crop_len, "input shorter than crop");
  Rng rng(mix_seed(0x54525543u, seed));
  return rng.uniform_int(input_len - crop_len + 1);
}

Waveform truncate_segment(const Waveform& w, double seconds, uint64_t seed,
                          TruncatePolicy policy, bool* padded_flag) {
  w.validate();
  require_arg(seconds > 0, "segment length must be positive");
  const size_t len = static_cast<size_t>(std::llround(seconds * w.sample_rate));
  if (padded_flag) *padded_flag = false;
  if (w.size() < len) {
    require_arg(policy == TruncatePolicy::kReflectPad,
                "input shorter than requested segment");
    Waveform out = w;
    out.samples.reserve(len);
    // Reflect off the end until long enough.
    size_t src = w.size() >= 2 ? w.size() - 2 : 0;
    int dir = -1;
    while (out.samples.size() < len) {
      out.samples.push_back(w.samples[src]);
      if (src == 0) dir = 1;
      if (src + 1 == w.size()) dir = -1;
      src = size_t(int64_t(src) + dir);
    }
    if (padded_flag) *padded_flag = true;
    return out;
  }
  const size_t off = truncate_offset(w.size(), len, seed);
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + off, w.samples.begin() + off + len);
  return out;
}

// ---------------------------------------------------------------------------

const UttEntry& Manifest::find(const std::string& utt_id) const {
  for (const auto& e : entries)
    if (e.utt_id == utt_id) return e;
  throw Error(ErrorCode::kInvalidArgument, "utterance not in manifest: " + utt_id);
}

bool Manifest::contains(const std::string& utt_id) const {
  for (const auto& e : entries)
    if (e.utt_id == utt_id) return true;
  return false;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::kIoError, "cannot open manifest: " + path);
  Manifest m;
  m.dir = fs::path(path).parent_path().string();
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    UttEntry e;
    std::string spk;
    if (!std::getline(is, e.utt_id, '\t') || !std::getline(is, spk, '\t') ||
        !std::getline(is, e.rel_path, '\t')) {
      throw Error(ErrorCode::kFormatError,
                  "bad manifest line " + std::to_string(lineno) + " in " + path);
    }
    e.speaker_id = std::stoi(spk);
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::kIoError, "cannot write manifest: " + path);
  for (const auto& e : m.entries)
    f << e.utt_id << '\t' << e.speaker_id << '\t' << e.rel_path << '\n';
}

CorpusPaths corpus_paths(const std::string& out_dir) {
  CorpusPaths p;
  p.root = out_dir;
  p.manifest_train = out_dir + "/manifest_train.tsv";
  p.manifest_test_seen = out_dir + "/manifest_test_seen.tsv";
  p.manifest_test_unseen = out_dir + "/manifest_test_unseen.tsv";
  p.trials_seen = out_dir + "/trials_seen.txt";
  p.trials_unseen = out_dir + "/trials_unseen.txt";
  return p;
}

namespace {

void write_trials(const std::string& path, const Manifest& m, uint64_t seed) {
  // All same-speaker pairs as targets, an equal number of sampled
  // cross-speaker pairs as nontargets.
  std::vector<std::pair<std::string, std::string>> targets, nontargets;
  for (size_t i = 0; i < m.entries.size(); ++i)
    for (size_t j = i + 1; j < m.entries.size(); ++j)
      if (m.entries[i].speaker_id == m.entries[j].speaker_id)
        targets.push_back({m.entries[i].utt_id, m.entries[j].utt_id});

  Rng rng(mix_seed(0x54524941u, seed));
  std::set<std::pair<size_t, size_t>> used;
  size_t guard = 0;
  while (nontargets.size() < targets.size() && guard++ < targets.size() * 200) {
    size_t i = rng.uniform_int(m.entries.size());
    size_t j = rng.uniform_int(m.entries.size());
    if (i == j || m.entries[i].speaker_id == m.entries[j].speaker_id) continue;
    if (i > j) std::swap(i, j);
    if (!used.insert({i, j}).second) continue;
    nontargets.push_back({m.entries[i].utt_id, m.entries[j].utt_id});
  }

  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::kIoError, "cannot write trials: " + path);
  for (const auto& [a, b] : targets) f << "1 " << a << ' ' << b << '\n';
  for (const auto& [a, b] : nontargets) f << "0 " << a << ' ' << b << '\n';
}

}  // namespace

CorpusPaths build_corpus(const CorpusSpec& spec, const std::string& out_dir) {
  require_arg(spec.n_speakers >= 2, "need at least two speakers");
  const auto paths = corpus_paths(out_dir);
  fs::create_directories(out_dir);

  Manifest train, seen, unseen;
  train.dir = seen.dir = unseen.dir = out_dir;

  auto synth_to = [&](const SpeakerSpec& sp, const std::string& rel,
                      uint64_t utt_seed) {
    auto w = synth_utterance(sp, spec.utt_duration_s, utt_seed, spec.sample_rate);
    const auto full = fs::path(out_dir) / rel;
    fs::create_directories(full.parent_path());
    write_wav(full.string(), w);
  };

  for (int s = 0; s < spec.n_speakers; ++s) {
    const auto sp = make_speaker_spec(s, spec.seed);
    for (int j = 0; j < spec.utts_per_speaker; ++j) {
      UttEntry e{"s" + std::to_string(s) + "_u" + std::to_string(j), s,
                 "train/spk" + std::to_string(s) + "/u" + std::to_string(j) + ".wav"};
      synth_to(sp, e.rel_path, mix_seed(spec.seed, uint64_t(s) * 100000 + j));
      train.entries.push_back(e);
    }
    for (int j = 0; j < spec.test_utts_per_speaker; ++j) {
      UttEntry e{"s" + std::to_string(s) + "_t" + std::to_string(j), s,
                 "test_seen/spk" + std::to_string(s) + "/t" + std::to_string(j) + ".wav"};
      synth_to(sp, e.rel_path,
               mix_seed(spec.seed, uint64_t(s) * 100000 + 50000 + j));
      seen.entries.push_back(e);
    }
  }
  for (int s = 0; s < spec.n_unseen_speakers; ++s) {
    const int sid = 1000 + s;
    const auto sp = make_speaker_spec(sid, spec.seed);
    for (int j = 0; j < spec.unseen_utts_per_speaker; ++j) {
      UttEntry e{"u" + std::to_string(sid) + "_t" + std::to_string(j), sid,
                 "test_unseen/spk" + std::to_string(sid) + "/t" + std::to_string(j) + ".wav"};
      synth_to(sp, e.rel_path, mix_seed(spec.seed, uint64_t(sid) * 100000 + j));
      unseen.entries.push_back(e);
    }
  }

  save_manifest(paths.manifest_train, train);
  save_manifest(paths.manifest_test_seen, seen);
  save_manifest(paths.manifest_test_unseen, unseen);
  write_trials(paths.trials_seen, seen, spec.seed);
  write_trials(paths.trials_unseen, unseen, spec.seed + 1);
  return paths;
}

}  // namespace ufema
