// core/enhance.hpp

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

#ifndef UFEMA_CORE_ENHANCE_HPP_
#define UFEMA_CORE_ENHANCE_HPP_

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "core/dsp.hpp"
#include "core/waveform.hpp"

namespace ufema {

// Uniform front: every enhancer maps a waveform to a same-length waveform
// and can be frozen to disk. Downstream code treats all of them alike.
class Enhancer {
 public:
  virtual ~Enhancer() = default;
  virtual const std::string& name() const = 0;
  virtual Waveform enhance(const Waveform& noisy) const = 0;
  // Hash over all parameters; joint training pins this to detect any drift
  // in a supposedly frozen enhancer.
  virtual uint64_t params_hash() const = 0;
  virtual void save(const std::string& path) const = 0;
};

// Classical magnitude-domain spectral subtraction. The noise profile is
// re-estimated per utterance from the lowest-energy 10% of frames; `oversub`
// scales the subtracted profile and `floor` keeps at least that fraction of
// the noisy magnitude.
std::unique_ptr<Enhancer> make_spectral_subtraction(double oversub, double floor,
                                                    const StftConfig& stft);

struct MaskTrainConfig {
  int hidden = 96;
  int epochs = 4;
  double lr = 1e-3;
  int batch = 256;
  uint64_t seed = 1;
  StftConfig stft;
};

// Trains a small per-frame mask MLP (3-frame log-magnitude context ->
// sigmoid mask) to MSE-match clean magnitudes on (noisy, clean) pairs.
// Appends the mean loss of each epoch to *epoch_losses when given; throws
// kTrainingFailure if the loss goes non-finite.
std::unique_ptr<Enhancer> train_mask_enhancer(
    const std::vector<std::pair<Waveform, Waveform>>& noisy_clean,
    const MaskTrainConfig& cfg, std::vector<double>* epoch_losses = nullptr);

// Reads back either enhancer kind from its saved file.
std::unique_ptr<Enhancer> load_enhancer(const std::string& path);

// Reflect-pads x by one window on each side, applies `fn` to the padded
// spectrogram in place, and resynthesizes the original length. Keeps
// window tapering and frame statistics away from the signal edges.
std::vector<float> stft_process_padded(
    const std::vector<float>& x, const StftConfig& cfg,
    const std::function<void(Spectrogram*)>& fn);

}  // namespace ufema

#endif  // UFEMA_CORE_ENHANCE_HPP_
