// core/features.cpp

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

#include "core/features.hpp"

namespace ufema {

MelFeature log_mel(const Waveform& w, const FeatureConfig& cfg) {
  w.validate();
  const auto sc = cfg.stft(w.sample_rate);
  require_arg(static_cast<int>(w.size()) >= sc.win_len,
              "waveform too short for one frame");
  const auto spec = stft(w.samples, sc);
  const auto fb = mel_filterbank(cfg.n_mels, cfg.n_fft, w.sample_rate);

  MelFeature m;
  m.t = spec.t;
  m.f = cfg.n_mels;
  m.frame_hop_s = cfg.hop_ms / 1000.0;
  m.frame_len_s = cfg.win_ms / 1000.0;
  m.values.resize(size_t(m.t) * m.f);

  std::vector<float> mag(spec.bins);
  for (int i = 0; i < spec.t; ++i) {
    for (int b = 0; b < spec.bins; ++b) mag[b] = std::abs(spec.at(i, b));
    for (int k = 0; k < cfg.n_mels; ++k) {
      double e = 0.0;
      const auto& f = fb[k];
      for (int b = 0; b < spec.bins; ++b) e += f[b] * mag[b];
      m.at(i, k) = static_cast<float>(std::log(e + cfg.log_eps));
    }
  }
  return m;
}

MultiChannelFeature stack_channels(const MelFeature& noisy,
                                   const std::vector<MelFeature>& enhanced) {
  require_arg(!enhanced.empty(), "need at least one enhanced channel");
  for (size_t i = 0; i < enhanced.size(); ++i) {
    require_arg(enhanced[i].t == noisy.t && enhanced[i].f == noisy.f,
                "shape mismatch on enhanced channel " + std::to_string(i + 1) +
                    ": (" + std::to_string(enhanced[i].t) + "," +
                    std::to_string(enhanced[i].f) + ") vs noisy (" +
                    std::to_string(noisy.t) + "," + std::to_string(noisy.f) + ")");
  }
  MultiChannelFeature out;
  out.channels.reserve(enhanced.size() + 1);
  out.channels.push_back(noisy);
  for (const auto& e : enhanced) out.channels.push_back(e);
  return out;
}

MelFeature mean_normalize(const MelFeature& m) {
  MelFeature out = m;
  for (int k = 0; k < m.f; ++k) {
    double mean = 0.0;
    for (int i = 0; i < m.t; ++i) mean += m.at(i, k);
    mean /= m.t;
    for (int i = 0; i < m.t; ++i) out.at(i, k) = static_cast<float>(m.at(i, k) - mean);
  }
  return out;
}

}  // namespace ufema
