// core/features.hpp

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

#ifndef UFEMA_CORE_FEATURES_HPP_
#define UFEMA_CORE_FEATURES_HPP_

#include <string>
#include <vector>

#include "core/dsp.hpp"
#include "core/waveform.hpp"

namespace ufema {

struct FeatureConfig {
  int n_mels = 80;
  double win_ms = 25.0;
  double hop_ms = 10.0;
  int n_fft = 512;
  double log_eps = 1e-6;

  StftConfig stft(int sample_rate) const {
    StftConfig c;
    c.win_len = static_cast<int>(std::llround(win_ms * sample_rate / 1000.0));
    c.hop = static_cast<int>(std::llround(hop_ms * sample_rate / 1000.0));
    c.n_fft = n_fft;
    return c;
  }
};

// T x F log-mel feature, row-major.
struct MelFeature {
  std::vector<float> values;  // t * f
  int t = 0;
  int f = 0;
  double frame_hop_s = 0.01;
  double frame_len_s = 0.025;

  float& at(int frame, int bin) { return values[size_t(frame) * f + bin]; }
  float at(int frame, int bin) const { return values[size_t(frame) * f + bin]; }
};

// (N+1) x T x F channel stack; channel 0 is the noisy feature.
struct MultiChannelFeature {
  std::vector<MelFeature> channels;

  int n_channels() const { return static_cast<int>(channels.size()); }
  int t() const { return channels.empty() ? 0 : channels[0].t; }
  int f() const { return channels.empty() ? 0 : channels[0].f; }
};

// Magnitude STFT -> HTK mel filterbank -> log(x + eps).
MelFeature log_mel(const Waveform& w, const FeatureConfig& cfg);

// Channel 0 = noisy, channels 1..N = enhanced in registry order. Values are
// copied untouched.
MultiChannelFeature stack_channels(const MelFeature& noisy,
                                   const std::vector<MelFeature>& enhanced);

// Per-utterance cepstral-style mean normalization: subtract each bin's mean
// over time. Applied to encoder inputs, after fusion.
MelFeature mean_normalize(const MelFeature& m);

}  // namespace ufema

#endif  // UFEMA_CORE_FEATURES_HPP_
