// tests/test_dsp.cpp - STFT, mel filterbank, and log-mel features against
// naive reference implementations.

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
#include <random>
#include <vector>

#include "core/dsp.hpp"
#include "core/features.hpp"
#include "doctest.h"

using namespace ufema;

namespace {

constexpr double kPi = 3.14159265358979323846;

// O(n^2) DFT of one windowed frame: the reference the FFT path must match.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x, int n_fft) {
  std::vector<std::complex<double>> out(n_fft / 2 + 1);
  for (int k = 0; k <= n_fft / 2; ++k) {
    std::complex<double> acc(0, 0);
    for (int t = 0; t < n_fft; ++t) {
      const double v = t < static_cast<int>(x.size()) ? x[t] : 0.0;
      acc += v * std::exp(std::complex<double>(0, -2.0 * kPi * k * t / n_fft));
    }
    out[k] = acc;
  }
  return out;
}

Waveform sine_wave(double hz, double seconds, int sr, double amp = 0.3) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(static_cast<size_t>(seconds * sr));
  for (size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = static_cast<float>(amp * std::sin(2.0 * kPi * hz * i / sr));
  return w;
}

}  // namespace

TEST_CASE("hann window endpoints and midpoint (periodic form)") {
  const auto w = hann_window(400);
  REQUIRE(w.size() == 400);
  CHECK(w[0] == doctest::Approx(0.0));
  CHECK(w[200] == doctest::Approx(1.0));
  // Periodic: w[n] = 0.5 - 0.5 cos(2 pi n / N), so w[1] != w[N-1] mirror of
  // the symmetric form.
  CHECK(w[1] == doctest::Approx(0.5 - 0.5 * std::cos(2.0 * kPi / 400)).epsilon(1e-12));
}

TEST_CASE("stft frame count and bin count") {
  StftConfig cfg;  // 400/160/512
  std::vector<float> x(32000, 0.1f);
  const Spectrogram s = stft(x, cfg);
  CHECK(s.t == 1 + (32000 - 400) / 160);  // 198
  CHECK(s.t == cfg.n_frames(x.size()));
  CHECK(s.bins == 257);
  CHECK(s.v.size() == size_t(s.t) * s.bins);
}

TEST_CASE("stft rejects too-short input") {
  StftConfig cfg;
  std::vector<float> x(399, 0.f);
  CHECK_THROWS_AS(stft(x, cfg), Error);
}

TEST_CASE("stft matches a naive windowed DFT") {
  StftConfig cfg;
  cfg.win_len = 64;
  cfg.hop = 32;
  cfg.n_fft = 128;
  std::mt19937 gen(17);
  std::normal_distribution<float> nd(0.f, 0.3f);
  std::vector<float> x(200);
  for (auto& v : x) v = nd(gen);

  const Spectrogram s = stft(x, cfg);
  const auto win = hann_window(cfg.win_len);
  REQUIRE(s.t == 1 + (200 - 64) / 32);
  for (int fi = 0; fi < s.t; ++fi) {
    std::vector<double> frame(cfg.win_len);
    for (int i = 0; i < cfg.win_len; ++i) frame[i] = double(x[fi * cfg.hop + i]) * win[i];
    const auto ref = naive_dft(frame, cfg.n_fft);
    for (int k = 0; k <= cfg.n_fft / 2; ++k) {
      CHECK(std::abs(std::complex<double>(s.at(fi, k)) - ref[k]) < 1e-3);
    }
  }
}

TEST_CASE("fft forward/inverse round trip") {
  Fft fft(256);
  std::mt19937 gen(3);
  std::normal_distribution<double> nd;
  std::vector<double> x(256), y(256);
  for (auto& v : x) v = nd(gen);
  std::vector<std::complex<double>> spec(129);
  fft.forward(x.data(), spec.data());
  fft.inverse(spec.data(), y.data());
  for (int i = 0; i < 256; ++i) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-10));
}

TEST_CASE("istft reconstructs the interior of the signal") {
  StftConfig cfg;
  std::mt19937 gen(9);
  std::normal_distribution<float> nd(0.f, 0.2f);
  std::vector<float> x(16000);
  for (auto& v : x) v = nd(gen);
  const Spectrogram s = stft(x, cfg);
  const auto y = istft(s, cfg, x.size());
  REQUIRE(y.size() == x.size());
  // Edges lack full window overlap; the interior must match closely.
  for (size_t i = cfg.win_len; i + cfg.win_len < x.size(); ++i)
    CHECK(std::abs(y[i] - x[i]) < 1e-4);
}

TEST_CASE("mel filterbank shape, coverage, and peak placement") {
  const int sr = 16000, n_fft = 512, n_mels = 80;
  const auto fb = mel_filterbank(n_mels, n_fft, sr);
  REQUIRE(fb.size() == size_t(n_mels));
  REQUIRE(fb[0].size() == size_t(n_fft / 2 + 1));

  // Every filter is nonnegative with nonzero mass; centers are monotone.
  int prev_peak = -1;
  for (int m = 0; m < n_mels; ++m) {
    double mass = 0.0;
    int peak = 0;
    for (size_t k = 0; k < fb[m].size(); ++k) {
      CHECK(fb[m][k] >= 0.f);
      mass += fb[m][k];
      if (fb[m][k] > fb[m][peak]) peak = int(k);
    }
    CHECK(mass > 0.0);
    CHECK(peak >= prev_peak);
    prev_peak = peak;
  }

  // Peak bins follow the HTK mel spacing: center m sits at
  // mel-uniform point (m+1) of n_mels+2 between 0 and Nyquist.
  const double mel_max = hz_to_mel(sr / 2.0);
  for (int m : {0, 20, 40, 79}) {
    const double hz = mel_to_hz(mel_max * (m + 1) / (n_mels + 1));
    const int expect = int(std::round(hz * n_fft / sr));
    int peak = 0;
    for (size_t k = 0; k < fb[m].size(); ++k)
      if (fb[m][k] > fb[m][peak]) peak = int(k);
    CHECK(std::abs(peak - expect) <= 1);
  }
}

TEST_CASE("log-mel of a pure tone peaks at the matching mel band") {
  FeatureConfig fc;
  const int sr = 16000;
  for (double hz : {300.0, 1000.0, 3000.0}) {
    const Waveform w = sine_wave(hz, 1.0, sr);
    const MelFeature m = log_mel(w, fc);
    REQUIRE(m.f == 80);
    // Expected band: the filter whose center frequency is nearest the tone.
    const double mel_max = hz_to_mel(sr / 2.0);
    int expect = 0;
    double best = 1e18;
    for (int b = 0; b < 80; ++b) {
      const double c = mel_to_hz(mel_max * (b + 1) / 81.0);
      if (std::abs(c - hz) < best) {
        best = std::abs(c - hz);
        expect = b;
      }
    }
    // Mid-utterance frame argmax.
    const int fr = m.t / 2;
    int got = 0;
    for (int b = 0; b < 80; ++b)
      if (m.at(fr, b) > m.at(fr, got)) got = b;
    CHECK(std::abs(got - expect) <= 1);
  }
}

TEST_CASE("log-mel of silence is log(eps) everywhere") {
  FeatureConfig fc;
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000, 0.f);
  const MelFeature m = log_mel(w, fc);
  const float expect = std::log(float(fc.log_eps));
  for (float v : m.values) CHECK(v == doctest::Approx(expect));
}

TEST_CASE("log-mel frame geometry matches the STFT contract") {
  FeatureConfig fc;
  Waveform w = sine_wave(440.0, 2.0, 16000);
  const MelFeature m = log_mel(w, fc);
  CHECK(m.t == 1 + (32000 - 400) / 160);  // 198 frames for 2 s
  CHECK(m.f == 80);
  CHECK(m.frame_hop_s == doctest::Approx(0.01));
}

TEST_CASE("scaling the waveform shifts log-mel by ln(c) where energy dominates eps") {
  FeatureConfig fc;
  Waveform w = sine_wave(800.0, 1.0, 16000, 0.5);
  Waveform w2 = w;
  const float c = 2.0f;
  for (auto& v : w2.samples) v *= c;
  const MelFeature a = log_mel(w, fc), b = log_mel(w2, fc);
  // Check the bin at the tone where mel energy >> eps; the magnitude-domain
  // filterbank output scales by c.
  const int fr = a.t / 2;
  int peak = 0;
  for (int k = 0; k < a.f; ++k)
    if (a.at(fr, k) > a.at(fr, peak)) peak = k;
  CHECK(b.at(fr, peak) - a.at(fr, peak) ==
        doctest::Approx(std::log(c)).epsilon(1e-3));
}
