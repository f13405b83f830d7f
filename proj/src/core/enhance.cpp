// core/enhance.cpp

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

#include "core/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "core/checkpoint.hpp"
#include "core/nn/adam.hpp"
#include "core/nn/layers.hpp"

namespace ufema {

namespace {

constexpr float kLogMagEps = 1e-6f;

std::vector<float> reflect_pad(const std::vector<float>& x, int pad) {
  require_arg(pad > 0 && static_cast<size_t>(pad) < x.size(),
              "input too short for reflect padding");
  std::vector<float> y;
  y.reserve(x.size() + 2 * pad);
  for (int i = pad; i >= 1; --i) y.push_back(x[i]);
  y.insert(y.end(), x.begin(), x.end());
  for (int i = 0; i < pad; ++i) y.push_back(x[x.size() - 2 - i]);
  return y;
}

void check_rate(const Waveform& w) {
  w.validate();
  require_arg(w.sample_rate == kDefaultSampleRate,
              "enhancer expects " + std::to_string(kDefaultSampleRate) + " Hz input");
}

uint64_t hash_doubles(uint64_t h, std::initializer_list<double> xs) {
  for (double x : xs) {
    uint64_t bits;
    std::memcpy(&bits, &x, 8);
    h = mix_seed(h, bits);
  }
  return h;
}

StftConfig stft_from_ckpt(const CheckpointFile& ck) {
  StftConfig s;
  s.win_len = static_cast<int>(ck.meta_int("stft_win"));
  s.hop = static_cast<int>(ck.meta_int("stft_hop"));
  s.n_fft = static_cast<int>(ck.meta_int("stft_nfft"));
  return s;
}

void stft_to_ckpt(const StftConfig& s, CheckpointFile* ck) {
  ck->set_meta("stft_win", std::to_string(s.win_len));
  ck->set_meta("stft_hop", std::to_string(s.hop));
  ck->set_meta("stft_nfft", std::to_string(s.n_fft));
}

class SpectralSubtraction : public Enhancer {
 public:
  SpectralSubtraction(double oversub, double floor, const StftConfig& stft)
      : name_("specsub"), oversub_(oversub), floor_(floor), stft_(stft) {
    require_arg(oversub_ >= 0.0, "oversubtraction factor must be non-negative");
    require_arg(floor_ >= 0.0 && floor_ <= 1.0, "spectral floor must be in [0, 1]");
  }

  const std::string& name() const override { return name_; }

  Waveform enhance(const Waveform& noisy) const override {
    check_rate(noisy);
    Waveform out = noisy;
    out.samples = stft_process_padded(noisy.samples, stft_, [this](Spectrogram* s) {
      subtract(s);
    });
    return out;
  }

  uint64_t params_hash() const override {
    uint64_t h = fnv1a64(name_);
    h = hash_doubles(h, {oversub_, floor_, double(stft_.win_len), double(stft_.hop),
                         double(stft_.n_fft)});
    return h;
  }

  void save(const std::string& path) const override {
    CheckpointFile ck;
    ck.set_meta("kind", "specsub");
    ck.set_meta("oversub", std::to_string(oversub_));
    ck.set_meta("floor", std::to_string(floor_));
    stft_to_ckpt(stft_, &ck);
    ck.save(path);
  }

 private:
  void subtract(Spectrogram* s) const {
    const int T = s->t, B = s->bins;
    require_arg(T >= 1, "empty spectrogram");
    // Noise profile: mean magnitude per bin over the 10% lowest-energy frames
    // (at least one frame).
    std::vector<double> energy(T, 0.0);
    for (int t = 0; t < T; ++t)
      for (int b = 0; b < B; ++b) energy[t] += std::norm(s->at(t, b));
    std::vector<int> order(T);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return energy[a] < energy[b]; });
    const int n_quiet = std::max(1, T / 10);
    std::vector<double> profile(B, 0.0);
    for (int i = 0; i < n_quiet; ++i)
      for (int b = 0; b < B; ++b) profile[b] += std::abs(s->at(order[i], b));
    for (int b = 0; b < B; ++b) profile[b] /= n_quiet;

    for (int t = 0; t < T; ++t)
      for (int b = 0; b < B; ++b) {
        std::complex<float>& c = s->at(t, b);
        const double mag = std::abs(c);
        const double kept =
            std::max(mag - oversub_ * profile[b], floor_ * mag);
        c *= static_cast<float>(mag > 0.0 ? kept / mag : 0.0);
      }
  }

  std::string name_;
  double oversub_, floor_;
  StftConfig stft_;
};

// Per-frame mask MLP over a 3-frame log-magnitude context.
class MaskEnhancer : public Enhancer {
 public:
  MaskEnhancer(int hidden, const StftConfig& stft)
      : name_("masknet"),
        hidden_(hidden),
        stft_(stft),
        l1_("mask.l1", 3 * stft.n_bins(), hidden),
        l2_("mask.l2", hidden, stft.n_bins()) {
    require_arg(hidden > 0, "mask hidden size must be positive");
  }

  const std::string& name() const override { return name_; }

  nn::Tensor<float> features(const Spectrogram& s) const {
    const int T = s.t, B = s.bins;
    nn::Tensor<float> x({T, 3 * B});
    for (int t = 0; t < T; ++t)
      for (int k = -1; k <= 1; ++k) {
        const int src = std::clamp(t + k, 0, T - 1);
        for (int b = 0; b < B; ++b)
          x.v[size_t(t) * 3 * B + (k + 1) * B + b] =
              std::log(std::abs(s.at(src, b)) + kLogMagEps);
      }
    return x;
  }

  nn::Tensor<float> mask_forward(const nn::Tensor<float>& x, bool train) {
    auto h = l1_.forward(x);
    h = relu_.forward(h);
    h = l2_.forward(h);
    auto m = sig_.forward(h);
    if (!train) relu_.release_cache();
    return m;
  }

  void mask_backward(const nn::Tensor<float>& dm) {
    auto d = sig_.backward(dm);
    d = l2_.backward(d);
    d = relu_.backward(d);
    l1_.backward(d);
  }

  Waveform enhance(const Waveform& noisy) const override {
    check_rate(noisy);
    auto* self = const_cast<MaskEnhancer*>(this);  // forward caches only
    Waveform out = noisy;
    out.samples =
        stft_process_padded(noisy.samples, stft_, [self](Spectrogram* s) {
          const nn::Tensor<float> x = self->features(*s);
          const nn::Tensor<float> m = self->mask_forward(x, /*train=*/false);
          for (int t = 0; t < s->t; ++t)
            for (int b = 0; b < s->bins; ++b)
              s->at(t, b) *= m.v[size_t(t) * s->bins + b];
        });
    return out;
  }

  std::vector<nn::Param<float>*> params() {
    std::vector<nn::Param<float>*> out;
    l1_.params(&out);
    l2_.params(&out);
    return out;
  }

  uint64_t params_hash() const override {
    auto* self = const_cast<MaskEnhancer*>(this);
    uint64_t h = fnv1a64(name_);
    h = hash_doubles(h, {double(hidden_), double(stft_.win_len), double(stft_.hop),
                         double(stft_.n_fft)});
    for (auto* p : self->params())
      for (float v : p->value.v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        h = mix_seed(h, bits);
      }
    return h;
  }

  void save(const std::string& path) const override {
    auto* self = const_cast<MaskEnhancer*>(this);
    CheckpointFile ck;
    ck.set_meta("kind", "masknet");
    ck.set_meta("hidden", std::to_string(hidden_));
    stft_to_ckpt(stft_, &ck);
    for (auto* p : self->params()) ck.add_tensor(p->name, p->value.v);
    ck.save(path);
  }

  void load_params(const CheckpointFile& ck) {
    for (auto* p : params()) {
      const auto& v = ck.tensor(p->name);
      require(v.size() == p->value.v.size(), ErrorCode::kFormatError,
              "tensor size mismatch for " + p->name);
      p->value.v = v;
    }
  }

  void init(Rng* rng) {
    l1_.init(rng);
    l2_.init(rng);
  }

 private:
  std::string name_;
  int hidden_;
  StftConfig stft_;
  nn::Linear<float> l1_, l2_;
  nn::Relu<float> relu_;
  nn::Sigmoid<float> sig_;
};

}  // namespace

std::vector<float> stft_process_padded(
    const std::vector<float>& x, const StftConfig& cfg,
    const std::function<void(Spectrogram*)>& fn) {
  const int pad = cfg.win_len;
  std::vector<float> padded = reflect_pad(x, pad);
  Spectrogram spec = stft(padded, cfg);
  fn(&spec);
  std::vector<float> y = istft(spec, cfg, padded.size());
  return std::vector<float>(y.begin() + pad, y.begin() + pad + x.size());
}

std::unique_ptr<Enhancer> make_spectral_subtraction(double oversub, double floor,
                                                    const StftConfig& stft) {
  return std::make_unique<SpectralSubtraction>(oversub, floor, stft);
}

std::unique_ptr<Enhancer> train_mask_enhancer(
    const std::vector<std::pair<Waveform, Waveform>>& noisy_clean,
    const MaskTrainConfig& cfg, std::vector<double>* epoch_losses) {
  require_arg(!noisy_clean.empty(), "no training pairs for mask enhancer");
  auto net = std::make_unique<MaskEnhancer>(cfg.hidden, cfg.stft);
  Rng rng(mix_seed(0x4d41534bULL, cfg.seed));
  net->init(&rng);

  // Flatten all pairs into per-frame samples once.
  const int B = cfg.stft.n_bins();
  std::vector<std::vector<float>> inputs;     // 3B context
  std::vector<std::vector<float>> noisy_mag;  // B
  std::vector<std::vector<float>> clean_mag;  // B
  for (const auto& [noisy, clean] : noisy_clean) {
    check_rate(noisy);
    check_rate(clean);
    require_arg(noisy.samples.size() == clean.samples.size(),
                "noisy/clean length mismatch");
    const Spectrogram sn = stft(noisy.samples, cfg.stft);
    const Spectrogram sc = stft(clean.samples, cfg.stft);
    const nn::Tensor<float> feats = net->features(sn);
    for (int t = 0; t < sn.t; ++t) {
      inputs.emplace_back(feats.v.begin() + size_t(t) * 3 * B,
                          feats.v.begin() + size_t(t + 1) * 3 * B);
      std::vector<float> nm(B), cm(B);
      for (int b = 0; b < B; ++b) {
        nm[b] = std::abs(sn.at(t, b));
        cm[b] = std::abs(sc.at(t, b));
      }
      noisy_mag.push_back(std::move(nm));
      clean_mag.push_back(std::move(cm));
    }
  }
  const size_t n = inputs.size();

  auto params = net->params();
  nn::Adam<float> opt(params, static_cast<float>(cfg.lr));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own rng for reproducibility.
    for (size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
    double epoch_loss = 0.0;
    size_t n_batches = 0;
    for (size_t start = 0; start < n; start += cfg.batch) {
      const int bs = static_cast<int>(std::min<size_t>(cfg.batch, n - start));
      nn::Tensor<float> x({bs, 3 * B}), ym({bs, B}), cm({bs, B});
      for (int i = 0; i < bs; ++i) {
        const size_t j = order[start + i];
        std::copy(inputs[j].begin(), inputs[j].end(), x.v.begin() + size_t(i) * 3 * B);
        std::copy(noisy_mag[j].begin(), noisy_mag[j].end(), ym.v.begin() + size_t(i) * B);
        std::copy(clean_mag[j].begin(), clean_mag[j].end(), cm.v.begin() + size_t(i) * B);
      }
      for (auto* p : params) p->zero_grad();
      nn::Tensor<float> m = net->mask_forward(x, /*train=*/true);
      // loss = mean over elements of (m*y - c)^2
      nn::Tensor<float> dm({bs, B});
      double loss = 0.0;
      const double inv = 1.0 / (double(bs) * B);
      for (int64_t i = 0; i < m.numel(); ++i) {
        const double r = double(m.v[i]) * ym.v[i] - cm.v[i];
        loss += r * r * inv;
        dm.v[i] = static_cast<float>(2.0 * r * ym.v[i] * inv);
      }
      require(std::isfinite(loss), ErrorCode::kTrainingFailure,
              "mask enhancer loss diverged at epoch " + std::to_string(epoch));
      net->mask_backward(dm);
      opt.step();
      epoch_loss += loss;
      ++n_batches;
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / n_batches);
  }
  return net;
}

std::unique_ptr<Enhancer> load_enhancer(const std::string& path) {
  CheckpointFile ck = CheckpointFile::load(path);
  const std::string kind = ck.meta("kind");
  const StftConfig stft = stft_from_ckpt(ck);
  if (kind == "specsub")
    return std::make_unique<SpectralSubtraction>(ck.meta_double("oversub"),
                                                 ck.meta_double("floor"), stft);
  if (kind == "masknet") {
    auto net = std::make_unique<MaskEnhancer>(
        static_cast<int>(ck.meta_int("hidden")), stft);
    net->load_params(ck);
    return net;
  }
  throw Error(ErrorCode::kFormatError, "unknown enhancer kind: " + kind);
}

}  // namespace ufema
