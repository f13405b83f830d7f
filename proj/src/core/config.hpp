// core/config.hpp

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

#ifndef UFEMA_CORE_CONFIG_HPP_
#define UFEMA_CORE_CONFIG_HPP_

#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/encoder.hpp"
#include "core/features.hpp"
#include "core/unet.hpp"

namespace ufema {

enum class EncoderMode { kEma, kFixed, kScratch, kFinetune };
enum class EvalCopy { kEma, kModel };

const char* encoder_mode_name(EncoderMode m);
EncoderMode encoder_mode_from_name(const std::string& s);

// One flat key-value config drives every stage. Unknown keys are hard
// errors; all defaults live here.
struct ExperimentConfig {
  // paths & identity; UFEMA_DATA_DIR / UFEMA_RUNS_DIR override the defaults
  std::string data_dir = default_data_dir();
  std::string runs_dir = default_runs_dir();
  std::string run_id = "run";
  uint64_t seed = 1;

  // corpus
  int n_speakers = 20;
  int utts_per_speaker = 50;
  int test_utts_per_speaker = 5;
  int n_unseen_speakers = 8;
  int unseen_utts_per_speaker = 10;
  double utt_duration_s = 3.0;
  double segment_s = 2.0;
  uint64_t corpus_seed = 7;
  int sample_rate = 16000;

  // features
  int n_mels = 80;
  double win_ms = 25.0;
  double hop_ms = 10.0;
  int n_fft = 512;
  double log_eps = 1e-6;

  // enhancers
  double enh_specsub_oversub = 2.0;
  double enh_specsub_floor = 0.05;
  int enh_mask_hidden = 96;
  int enh_epochs = 4;
  double enh_lr = 1e-3;
  int enh_batch = 256;
  int enh_train_pairs = 150;
  // Noise kinds the mask enhancer sees during its own training. Kinds left
  // out stay unseen by the enhancers; the fusion stage has to cover them.
  std::vector<std::string> enh_noise_kinds = {"noise", "music", "babble"};

  // fusion UNet
  std::vector<int> unet_channels = {32, 64, 128, 256};
  bool unet_skips = true;

  // speaker encoder & AAM
  int enc_channels = 64;
  std::vector<int> enc_dilations = {1, 2, 3};
  int enc_kernel = 3;
  int emb_dim = 192;
  double aam_margin = 0.2;
  double aam_scale = 30.0;

  // encoder pretraining
  int pretrain_epochs = 12;
  double pretrain_lr = 1e-3;
  int pretrain_batch = 32;

  // joint training
  double lr = 1e-3;
  double ema_alpha = 0.999;
  int epochs = 5;
  int batch_size = 32;
  double clean_fraction = 0.2;
  std::vector<double> train_snrs = {-5, 0, 5, 10};
  int noise_cache_per_kind = 48;
  int checkpoint_every = 0;  // 0 = final checkpoint only
  EncoderMode encoder_mode = EncoderMode::kEma;
  EvalCopy eval_copy = EvalCopy::kEma;
  bool use_noisy_channel = true;
  std::vector<std::string> enabled_enhancers = {"specsub", "masknet"};

  static std::string default_data_dir();
  static std::string default_runs_dir();

  // Sets one key from its text form; unknown keys are hard errors.
  void set_key(const std::string& key, const std::string& value);

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);
  std::string to_string() const;
  void validate() const;

  uint64_t config_hash() const { return fnv1a64(to_string()); }

  CorpusSpec corpus_spec() const;
  FeatureConfig feature_config() const;
  UNetConfig unet_config() const;  // in_channels derived from flags
  EncoderConfig encoder_config() const;
  AamConfig aam_config() const;

  int fusion_in_channels() const {
    return static_cast<int>(enabled_enhancers.size()) + (use_noisy_channel ? 1 : 0);
  }
};

}  // namespace ufema

#endif  // UFEMA_CORE_CONFIG_HPP_
