// core/waveform.hpp

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

#ifndef UFEMA_CORE_WAVEFORM_HPP_
#define UFEMA_CORE_WAVEFORM_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace ufema {

constexpr int kDefaultSampleRate = 16000;

// Mono audio, amplitudes nominally in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kDefaultSampleRate;

  size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  void validate() const {
    require_arg(!samples.empty(), "waveform must be non-empty");
    require_arg(sample_rate > 0, "sample_rate must be positive");
    for (float s : samples)
      require_arg(std::isfinite(s), "waveform contains non-finite sample");
  }
};

inline double mean_square_power(const std::vector<float>& x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]) * x[i];
  return acc / static_cast<double>(n);
}

inline double mean_square_power(const Waveform& w) {
  return mean_square_power(w.samples, w.samples.size());
}

inline double rms(const Waveform& w) { return std::sqrt(mean_square_power(w)); }

// Peak-normalize in place to the given absolute peak. No-op on silence.
inline void peak_normalize(Waveform* w, float peak) {
  float mx = 0.f;
  for (float s : w->samples) mx = std::max(mx, std::fabs(s));
  if (mx <= 0.f) return;
  const float g = peak / mx;
  for (float& s : w->samples) s *= g;
}

// 16-bit PCM mono RIFF I/O. Stereo or non-PCM input is rejected.
Waveform load_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

}  // namespace ufema

#endif  // UFEMA_CORE_WAVEFORM_HPP_
