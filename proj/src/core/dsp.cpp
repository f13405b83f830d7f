// core/dsp.cpp

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

#include "core/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>

namespace ufema {

struct Fft::Impl {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

Fft::Fft(int n) : n_(n), impl_(new Impl) {
  require_arg(n > 0 && (n & (n - 1)) == 0, "FFT size must be a power of two");
  impl_->in = fftw_alloc_real(n);
  impl_->out = fftw_alloc_complex(n / 2 + 1);
  impl_->fwd = fftw_plan_dft_r2c_1d(n, impl_->in, impl_->out, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r_1d(n, impl_->out, impl_->in, FFTW_ESTIMATE);
}

Fft::~Fft() {
  fftw_destroy_plan(impl_->fwd);
  fftw_destroy_plan(impl_->inv);
  fftw_free(impl_->in);
  fftw_free(impl_->out);
}

void Fft::forward(const double* in, std::complex<double>* out) const {
  std::memcpy(impl_->in, in, sizeof(double) * n_);
  fftw_execute(impl_->fwd);
  std::memcpy(out, impl_->out, sizeof(fftw_complex) * (n_ / 2 + 1));
}

void Fft::inverse(const std::complex<double>* in, double* out) const {
  std::memcpy(impl_->out, in, sizeof(fftw_complex) * (n_ / 2 + 1));
  fftw_execute(impl_->inv);
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[i] = impl_->in[i] * scale;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

Spectrogram stft(const std::vector<float>& x, const StftConfig& cfg) {
  const int t = cfg.n_frames(x.size());
  const int bins = cfg.n_bins();
  Spectrogram spec;
  spec.t = t;
  spec.bins = bins;
  spec.v.resize(size_t(t) * bins);

  Fft fft(cfg.n_fft);
  const auto win = hann_window(cfg.win_len);
  std::vector<double> frame(cfg.n_fft, 0.0);
  std::vector<std::complex<double>> out(bins);
  for (int i = 0; i < t; ++i) {
    const size_t off = size_t(i) * cfg.hop;
    for (int j = 0; j < cfg.win_len; ++j) frame[j] = x[off + j] * win[j];
    std::fill(frame.begin() + cfg.win_len, frame.end(), 0.0);
    fft.forward(frame.data(), out.data());
    for (int b = 0; b < bins; ++b) spec.at(i, b) = std::complex<float>(out[b]);
  }
  return spec;
}

std::vector<float> istft(const Spectrogram& spec, const StftConfig& cfg, size_t out_len) {
  require_arg(spec.bins == cfg.n_bins(), "spectrogram/config bin mismatch");
  Fft fft(cfg.n_fft);
  const auto win = hann_window(cfg.win_len);

  std::vector<double> acc(std::max(out_len, size_t(spec.t - 1) * cfg.hop + cfg.win_len), 0.0);
  std::vector<double> wsum(acc.size(), 0.0);
  std::vector<std::complex<double>> in(spec.bins);
  std::vector<double> frame(cfg.n_fft);
  for (int i = 0; i < spec.t; ++i) {
    for (int b = 0; b < spec.bins; ++b) in[b] = std::complex<double>(spec.at(i, b));
    fft.inverse(in.data(), frame.data());
    const size_t off = size_t(i) * cfg.hop;
    for (int j = 0; j < cfg.win_len; ++j) {
      acc[off + j] += frame[j] * win[j];
      wsum[off + j] += win[j] * win[j];
    }
  }
  std::vector<float> y(out_len, 0.f);
  for (size_t i = 0; i < out_len && i < acc.size(); ++i) {
    const double d = wsum[i] > 1e-8 ? wsum[i] : 1.0;
    y[i] = static_cast<float>(acc[i] / d);
  }
  return y;
}

std::vector<std::vector<float>> mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  require_arg(n_mels > 0, "n_mels must be positive");
  const int bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers_hz(n_mels + 2);
  for (int m = 0; m < n_mels + 2; ++m)
    centers_hz[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));

  std::vector<std::vector<float>> fb(n_mels, std::vector<float>(bins, 0.f));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = centers_hz[m], c = centers_hz[m + 1], hi = centers_hz[m + 2];
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f < c)
        w = (f - lo) / (c - lo);
      else if (f >= c && f < hi)
        w = (hi - f) / (hi - c);
      fb[m][b] = static_cast<float>(w);
    }
  }
  return fb;
}

}  // namespace ufema
