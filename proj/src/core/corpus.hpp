// core/corpus.hpp

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

#ifndef UFEMA_CORE_CORPUS_HPP_
#define UFEMA_CORE_CORPUS_HPP_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/waveform.hpp"

namespace ufema {

// A synthetic speaker: harmonic source at fundamental_hz shaped by a bank of
// formant resonators. Distinct speakers get distinct formant profiles.
struct Formant {
  double center_hz;
  double bandwidth_hz;
  double gain;
};

struct SpeakerSpec {
  int speaker_id = 0;
  double fundamental_hz = 120.0;
  std::vector<Formant> formants;
  uint64_t seed = 0;

  void validate() const;
};

enum class NoiseKind { kClean, kNoise, kMusic, kBabble };
enum class Pool { kTrain, kTest };

struct NoiseCondition {
  NoiseKind kind = NoiseKind::kClean;
  std::optional<double> snr_db;
  Pool pool = Pool::kTest;

  void validate() const;
  // Descriptor string, e.g. "babble@-5" or "clean".
  std::string descriptor() const;
  static NoiseCondition parse(const std::string& descriptor, Pool pool);
};

const char* noise_kind_name(NoiseKind k);
NoiseKind noise_kind_from_name(const std::string& s);

// Train and test noise draws come from disjoint seed ranges; the registry
// records every issued (kind, seed) pair and verifies the pools never
// intersect.
class NoisePoolRegistry {
 public:
  static constexpr uint64_t kPoolSpan = uint64_t(1) << 20;

  // Deterministic seed for the index-th clip of a pool; ranges are disjoint
  // by construction.
  uint64_t seed_for(Pool pool, NoiseKind kind, uint64_t index);

  void verify_disjoint() const;
  size_t issued_count() const { return train_.size() + test_.size(); }

 private:
  std::set<std::pair<int, uint64_t>> train_, test_;
};

// Deterministic speaker spec for a given id under a corpus seed.
SpeakerSpec make_speaker_spec(int speaker_id, uint64_t corpus_seed);

// Harmonic utterance with per-utterance pitch/amplitude jitter, formant
// filtered, peak-normalized to <= 0.9. Pure function of (spec, seed).
Waveform synth_utterance(const SpeakerSpec& spec, double duration_s,
                         uint64_t utterance_seed,
                         int sample_rate = kDefaultSampleRate);

// Component voices of a babble clip (>= 4 held-out synthetic speakers).
std::vector<Waveform> babble_components(double duration_s, uint64_t seed,
                                        int sample_rate = kDefaultSampleRate);

Waveform synth_noise(NoiseKind kind, double duration_s, uint64_t seed,
                     int sample_rate = kDefaultSampleRate);

// clean + g*noise with g chosen so the decomposition hits snr_db exactly,
// powers measured over the mixed region. Noise is cropped, never looped.
Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);

enum class TruncatePolicy { kError, kReflectPad };

// Contiguous crop of exact length with a seed-derived offset. Returns the
// crop; *padded_flag (if given) reports whether reflection padding was used.
Waveform truncate_segment(const Waveform& w, double seconds, uint64_t seed,
                          TruncatePolicy policy = TruncatePolicy::kError,
                          bool* padded_flag = nullptr);

// The offset the seeded generator picks for a given input; exposed so tests
// can re-derive it independently of the crop itself.
size_t truncate_offset(size_t input_len, size_t crop_len, uint64_t seed);

// ---------------------------------------------------------------------------
// On-disk corpus

struct UttEntry {
  std::string utt_id;
  int speaker_id;
  std::string rel_path;  // relative to the manifest's directory
};

struct Manifest {
  std::string dir;  // directory the manifest lives in
  std::vector<UttEntry> entries;

  const UttEntry& find(const std::string& utt_id) const;
  bool contains(const std::string& utt_id) const;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& m);

struct CorpusSpec {
  int n_speakers = 20;
  int utts_per_speaker = 50;
  int test_utts_per_speaker = 5;
  int n_unseen_speakers = 8;
  int unseen_utts_per_speaker = 10;
  double utt_duration_s = 3.0;
  uint64_t seed = 7;
  int sample_rate = kDefaultSampleRate;
};

struct CorpusPaths {
  std::string root;
  std::string manifest_train;
  std::string manifest_test_seen;
  std::string manifest_test_unseen;
  std::string trials_seen;
  std::string trials_unseen;
};

// Synthesizes the full corpus under out_dir: train wavs, held-out seen/unseen
// test wavs, manifests, and balanced trial lists.
CorpusPaths build_corpus(const CorpusSpec& spec, const std::string& out_dir);

CorpusPaths corpus_paths(const std::string& out_dir);

}  // namespace ufema

#endif  // UFEMA_CORE_CORPUS_HPP_
