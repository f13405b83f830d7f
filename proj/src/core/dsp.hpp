// core/dsp.hpp

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

#ifndef UFEMA_CORE_DSP_HPP_
#define UFEMA_CORE_DSP_HPP_

#include <complex>
#include <memory>
#include <vector>

#include "core/waveform.hpp"

namespace ufema {

struct StftConfig {
  int win_len = 400;  // 25 ms at 16 kHz
  int hop = 160;      // 10 ms
  int n_fft = 512;

  int n_bins() const { return n_fft / 2 + 1; }
  // Number of frames for an input of length L (no centering).
  int n_frames(size_t L) const {
    require_arg(static_cast<int>(L) >= win_len, "input shorter than one frame");
    return 1 + static_cast<int>((L - static_cast<size_t>(win_len)) / hop);
  }
};

// Complex STFT frames, row-major [T x n_bins].
struct Spectrogram {
  std::vector<std::complex<float>> v;
  int t = 0;
  int bins = 0;
  std::complex<float>& at(int frame, int bin) { return v[size_t(frame) * bins + bin]; }
  const std::complex<float>& at(int frame, int bin) const {
    return v[size_t(frame) * bins + bin];
  }
};

// One-shot real FFT of fixed size, FFTW-backed.
class Fft {
 public:
  explicit Fft(int n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int size() const { return n_; }
  // in: n real samples; out: n/2+1 complex bins.
  void forward(const double* in, std::complex<double>* out) const;
  // Inverse of forward, scaled so forward->inverse round-trips.
  void inverse(const std::complex<double>* in, double* out) const;

 private:
  int n_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Periodic Hann window of the given length.
std::vector<double> hann_window(int n);

// Hann-windowed STFT, no centering: frame i covers samples [i*hop, i*hop+win).
Spectrogram stft(const std::vector<float>& x, const StftConfig& cfg);

// Weighted overlap-add inverse; output has exactly out_len samples. Callers
// wanting clean edges should pad before stft and crop after (see
// stft_process_padded in enhance.cpp).
std::vector<float> istft(const Spectrogram& spec, const StftConfig& cfg, size_t out_len);

// HTK-style triangular mel filterbank, dense [n_mels x n_bins], spanning
// 0..Nyquist.
std::vector<std::vector<float>> mel_filterbank(int n_mels, int n_fft, int sample_rate);

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace ufema

#endif  // UFEMA_CORE_DSP_HPP_
