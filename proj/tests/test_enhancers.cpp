// tests/test_enhancers.cpp - spectral subtraction and the trained mask
// network: identity limits, denoising gains, freezing, and persistence.

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <filesystem>
#include <vector>

#include "core/corpus.hpp"
#include "core/enhance.hpp"
#include "doctest.h"

using namespace ufema;

namespace {

StftConfig default_stft() { return StftConfig{}; }

std::string temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("ufema_enh_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

double rms_diff(const Waveform& a, const Waveform& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = double(a.samples[i]) - b.samples[i];
    acc += d * d;
  }
  return std::sqrt(acc / a.size());
}

// SNR of `est` against the known clean component by orthogonal projection:
// the part of est aligned with clean counts as signal, the rest as
// distortion. Standard decomposition, independent of the enhancer internals.
double projection_snr_db(const Waveform& clean, const Waveform& est) {
  double cc = 0.0, ce = 0.0;
  for (size_t i = 0; i < clean.size(); ++i) {
    cc += double(clean.samples[i]) * clean.samples[i];
    ce += double(clean.samples[i]) * est.samples[i];
  }
  const double a = ce / cc;  // projection coefficient
  double sig = 0.0, err = 0.0;
  for (size_t i = 0; i < clean.size(); ++i) {
    const double s = a * clean.samples[i];
    const double e = double(est.samples[i]) - s;
    sig += s * s;
    err += e * e;
  }
  return 10.0 * std::log10(sig / err);
}

std::vector<std::pair<Waveform, Waveform>> training_pairs(int n, uint64_t seed) {
  std::vector<std::pair<Waveform, Waveform>> out;
  Rng rng(seed);
  NoisePoolRegistry reg;
  const NoiseKind kinds[] = {NoiseKind::kNoise, NoiseKind::kMusic, NoiseKind::kBabble};
  const double snrs[] = {-5, 0, 5, 10};
  for (int i = 0; i < n; ++i) {
    const SpeakerSpec s = make_speaker_spec(int(rng.uniform_int(6)), 7);
    const Waveform clean = synth_utterance(s, 1.0, rng.raw());
    const Waveform noise =
        synth_noise(kinds[rng.uniform_int(3)], 1.2,
                    reg.seed_for(Pool::kTrain, kinds[0], uint64_t(i)));
    out.push_back({mix_at_snr(clean, noise, snrs[rng.uniform_int(4)]), clean});
  }
  return out;
}

}  // namespace

TEST_CASE("spectral subtraction: floor=1 is an STFT round trip") {
  // With the floor at 1 the kept magnitude is never below the noisy
  // magnitude, and oversub=0 subtracts nothing: output == resynthesized
  // input up to windowing error.
  const SpeakerSpec s = make_speaker_spec(1, 7);
  const Waveform w = synth_utterance(s, 1.0, 3);
  for (auto [oversub, floor] : {std::pair{0.0, 0.0}, std::pair{5.0, 1.0}}) {
    auto enh = make_spectral_subtraction(oversub, floor, default_stft());
    const Waveform y = enh->enhance(w);
    REQUIRE(y.size() == w.size());
    CHECK(rms_diff(w, y) < 1e-4);
  }
}

TEST_CASE("spectral subtraction output contract") {
  const SpeakerSpec s = make_speaker_spec(2, 7);
  const Waveform clean = synth_utterance(s, 1.3, 4);
  const Waveform noise = synth_noise(NoiseKind::kNoise, 1.5, 100);
  const Waveform noisy = mix_at_snr(clean, noise, 0.0);
  auto enh = make_spectral_subtraction(2.0, 0.05, default_stft());
  const Waveform y = enh->enhance(noisy);
  CHECK(y.size() == noisy.size());
  CHECK(y.sample_rate == noisy.sample_rate);
  for (float v : y.samples) CHECK(std::isfinite(v));
  // A magnitude-shrinking operator cannot blow up the signal.
  CHECK(rms(y) <= 2.0 * rms(noisy));
  // Deterministic.
  CHECK(enh->enhance(noisy).samples == y.samples);
}

TEST_CASE("spectral subtraction reduces stationary noise power") {
  // Pure stationary noise in the gaps between speech energy: subtraction at
  // oversub=1 should strictly shrink total noise power on a noise-only
  // signal while leaving a clean tonal signal mostly intact.
  const Waveform noise = synth_noise(NoiseKind::kNoise, 1.0, 55);
  auto enh = make_spectral_subtraction(1.0, 0.05, default_stft());
  const Waveform y = enh->enhance(noise);
  CHECK(mean_square_power(y) < 0.6 * mean_square_power(noise));

  const SpeakerSpec s = make_speaker_spec(3, 7);
  const Waveform clean = synth_utterance(s, 1.0, 6);
  const Waveform yc = enh->enhance(clean);
  // Continuously voiced synthetic speech has no silent gaps, so the profile
  // eats some harmonics too; still, a clear majority of frames keep energy.
  CHECK(mean_square_power(yc) > 0.1 * mean_square_power(clean));
}

TEST_CASE("spectral subtraction matches an independent re-derivation") {
  // Re-derive the rule from its definition: per-bin noise profile = mean
  // magnitude over the lowest-energy 10% of frames; kept magnitude =
  // max(|X| - oversub * profile, floor * |X|). Run it through the same
  // padded STFT plumbing and demand sample-exact agreement.
  const double oversub = 2.0, floor = 0.05;
  const SpeakerSpec s = make_speaker_spec(4, 7);
  const Waveform clean = synth_utterance(s, 1.5, 8);
  const Waveform noise = synth_noise(NoiseKind::kNoise, 2.0, 77);
  const Waveform noisy = mix_at_snr(clean, noise, 0.0);

  const StftConfig sc = default_stft();
  auto enh = make_spectral_subtraction(oversub, floor, sc);
  const Waveform y = enh->enhance(noisy);

  const auto oracle = stft_process_padded(
      noisy.samples, sc, [&](Spectrogram* spec) {
        std::vector<std::pair<double, int>> energy(spec->t);
        for (int t = 0; t < spec->t; ++t) {
          double e = 0.0;
          for (int b = 0; b < spec->bins; ++b)
            e += std::norm(std::complex<double>(spec->at(t, b)));
          energy[t] = {e, t};
        }
        std::stable_sort(energy.begin(), energy.end());
        const int k = std::max(1, spec->t / 10);
        std::vector<double> profile(spec->bins, 0.0);
        for (int i = 0; i < k; ++i)
          for (int b = 0; b < spec->bins; ++b)
            profile[b] += std::abs(spec->at(energy[i].second, b)) / k;
        for (int t = 0; t < spec->t; ++t)
          for (int b = 0; b < spec->bins; ++b) {
            const double mag = std::abs(spec->at(t, b));
            const double kept = std::max(mag - oversub * profile[b], floor * mag);
            if (mag > 0) spec->at(t, b) *= static_cast<float>(kept / mag);
          }
      });
  REQUIRE(oracle.size() == y.size());
  double worst = 0.0;
  for (size_t i = 0; i < y.size(); ++i)
    worst = std::max(worst, std::abs(double(y.samples[i]) - oracle[i]));
  CHECK(worst < 1e-5);
}

TEST_CASE("mask enhancer training descends and denoises held-out mixtures") {
  MaskTrainConfig cfg;
  cfg.hidden = 48;
  cfg.epochs = 4;
  cfg.seed = 5;
  std::vector<double> losses;
  auto enh = train_mask_enhancer(training_pairs(24, 11), cfg, &losses);
  REQUIRE(losses.size() == 4);
  CHECK(losses.back() < losses.front());

  // Held-out speaker and noise clip, 0 dB white noise.
  const SpeakerSpec s = make_speaker_spec(17, 7);
  const Waveform clean = synth_utterance(s, 1.5, 901);
  NoisePoolRegistry reg;
  const Waveform noise =
      synth_noise(NoiseKind::kNoise, 2.0, reg.seed_for(Pool::kTest, NoiseKind::kNoise, 3));
  const Waveform noisy = mix_at_snr(clean, noise, 0.0);
  const Waveform y = enh->enhance(noisy);
  REQUIRE(y.size() == noisy.size());
  CHECK(projection_snr_db(clean, y) >= projection_snr_db(clean, noisy) + 3.0);

  // Near-clean input passes through mostly unchanged: spectral MSE against
  // clean must be far below the noisy baseline.
  const Waveform yc = enh->enhance(clean);
  CHECK(rms_diff(yc, clean) < 0.8 * rms_diff(noisy, clean));
}

TEST_CASE("mask enhancer is deterministic in its training seed") {
  MaskTrainConfig cfg;
  cfg.hidden = 24;
  cfg.epochs = 2;
  cfg.seed = 9;
  const auto pairs = training_pairs(8, 3);
  auto a = train_mask_enhancer(pairs, cfg);
  auto b = train_mask_enhancer(pairs, cfg);
  CHECK(a->params_hash() == b->params_hash());
  cfg.seed = 10;
  auto c = train_mask_enhancer(pairs, cfg);
  CHECK(a->params_hash() != c->params_hash());

  const SpeakerSpec s = make_speaker_spec(0, 7);
  const Waveform w = synth_utterance(s, 1.0, 77);
  CHECK(a->enhance(w).samples == b->enhance(w).samples);
}

TEST_CASE("enhancers round-trip through their saved files") {
  const std::string dir = temp_dir("roundtrip");
  const SpeakerSpec s = make_speaker_spec(5, 7);
  const Waveform noise = synth_noise(NoiseKind::kMusic, 1.5, 13);
  const Waveform noisy = mix_at_snr(synth_utterance(s, 1.0, 14), noise, 5.0);

  auto ss = make_spectral_subtraction(2.0, 0.05, default_stft());
  ss->save(dir + "/specsub.ck");
  auto ss2 = load_enhancer(dir + "/specsub.ck");
  CHECK(ss2->name() == ss->name());
  CHECK(ss2->params_hash() == ss->params_hash());
  CHECK(ss2->enhance(noisy).samples == ss->enhance(noisy).samples);

  MaskTrainConfig cfg;
  cfg.hidden = 24;
  cfg.epochs = 1;
  auto mn = train_mask_enhancer(training_pairs(6, 21), cfg);
  mn->save(dir + "/masknet.ck");
  auto mn2 = load_enhancer(dir + "/masknet.ck");
  CHECK(mn2->name() == mn->name());
  CHECK(mn2->params_hash() == mn->params_hash());
  CHECK(mn2->enhance(noisy).samples == mn->enhance(noisy).samples);

  CHECK_THROWS_AS(load_enhancer(dir + "/missing.ck"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("params_hash pins the parameters, not the instance") {
  auto a = make_spectral_subtraction(2.0, 0.05, default_stft());
  auto b = make_spectral_subtraction(2.0, 0.05, default_stft());
  auto c = make_spectral_subtraction(2.1, 0.05, default_stft());
  CHECK(a->params_hash() == b->params_hash());
  CHECK(a->params_hash() != c->params_hash());
}

TEST_CASE("mask training rejects empty input") {
  MaskTrainConfig cfg;
  CHECK_THROWS_AS(train_mask_enhancer({}, cfg), Error);
}
