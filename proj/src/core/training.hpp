// core/training.hpp

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

#ifndef UFEMA_CORE_TRAINING_HPP_
#define UFEMA_CORE_TRAINING_HPP_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/ema.hpp"
#include "core/encoder.hpp"
#include "core/enhance.hpp"
#include "core/evaluation.hpp"
#include "core/fusion.hpp"

namespace ufema {

// --------------------------------------------------------------------------
// Stage outputs live under <data_dir> (corpus, enhancers, pretrained encoder)
// and <runs_dir>/<run_id> (joint checkpoints, CSVs, plots).

std::string corpus_dir(const ExperimentConfig& cfg);
std::string enhancer_dir(const ExperimentConfig& cfg);
std::string pretrained_encoder_path(const ExperimentConfig& cfg);
std::string run_dir(const ExperimentConfig& cfg);
std::string joint_checkpoint_path(const ExperimentConfig& cfg);

// Enhancer files for the enabled set, registry order. Missing files throw.
std::vector<std::string> enhancer_paths(const ExperimentConfig& cfg);

// --------------------------------------------------------------------------
// Stage 1: enhancer training. Builds the classical enhancer and trains the
// mask network on train-pool noise; both are frozen to enhancer_dir.
struct EnhancerTrainReport {
  std::vector<double> mask_epoch_loss;
};
EnhancerTrainReport train_enhancers(const ExperimentConfig& cfg);

// --------------------------------------------------------------------------
// Stage 2: encoder pretraining on clean training speech.
struct PretrainReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;  // last epoch, argmax over class cosines
};
PretrainReport pretrain_encoder(const ExperimentConfig& cfg);

// --------------------------------------------------------------------------
// Stage 3: joint training of the fusion net (and encoder, per encoder_mode)
// with the smoothed encoder shadow updated every optimizer step.
struct JointTrainReport {
  std::vector<double> step_loss;
  int64_t steps_run = 0;
  int64_t total_steps = 0;
  std::string checkpoint;
};

// Runs up to max_steps optimizer steps (all remaining when < 0), resuming
// from the newest checkpoint in the run directory if one exists. Training
// state (weights, optimizer moments, sampler RNG) round-trips exactly, so an
// interrupted run continues bit-identically.
JointTrainReport train_joint(const ExperimentConfig& cfg, int64_t max_steps = -1);

// --------------------------------------------------------------------------
// Trained bundle: everything needed to embed a waveform.

class JointModel {
 public:
  static JointModel load(const std::string& checkpoint_path,
                         const ExperimentConfig& cfg);

  // Embedding of one utterance under a noise condition ("clean" skips
  // corruption). Deterministic: the noise seed is derived from the
  // utterance id and descriptor, always from the test pool.
  std::vector<float> embed(const Waveform& clean, const std::string& utt_id,
                           const NoiseCondition& cond);

  // Fused T x F feature for a waveform (before mean normalization).
  MelFeature fuse_waveform(const Waveform& w);

  UNet<float>* unet() { return unet_.get(); }
  SpeakerEncoder<float>* encoder() { return encoder_.get(); }
  const ExperimentConfig& config() const { return cfg_; }

 private:
  ExperimentConfig cfg_;
  std::unique_ptr<UNet<float>> unet_;
  std::unique_ptr<SpeakerEncoder<float>> encoder_;
  std::vector<std::unique_ptr<Enhancer>> enhancers_;
};

// Corrupt a test utterance under a condition, test pool only.
Waveform corrupt_for_eval(const Waveform& clean, const std::string& utt_id,
                          const NoiseCondition& cond, const ExperimentConfig& cfg);

// Signal-domain convex combination w * enhanced + (1 - w) * noisy.
Waveform linear_interp_baseline(double w, const Waveform& noisy,
                                const Waveform& enhanced);

// --------------------------------------------------------------------------
// Stage 4: evaluation.

// EER on a trial list per condition descriptor (e.g. {"clean", "babble@-5"}),
// plus a trailing "average" row over the requested conditions.
std::vector<ConditionResult> evaluate_conditions(
    const ExperimentConfig& cfg, const std::string& checkpoint_path,
    const std::string& manifest_path, const std::string& trials_path,
    const std::vector<std::string>& conditions, const std::string& out_csv = "");

// Same trial scoring through the pretrained encoder alone (no enhancers, no
// fusion): the clean-speech reference path.
std::vector<ConditionResult> evaluate_pretrained_baseline(
    const ExperimentConfig& cfg, const std::string& manifest_path,
    const std::string& trials_path, const std::vector<std::string>& conditions);

// Fixed-weight baseline: feature = w * mean(enhanced) + (1 - w) * noisy,
// scored with the pretrained (not jointly trained) encoder. One CSV row per
// (weight, condition); optional SVG curve with the learned fusion overlaid.
struct SweepResult {
  std::vector<double> weights;
  // eer[i][j] = weight i, condition j
  std::vector<std::string> conditions;
  std::vector<std::vector<double>> eer;
  std::vector<double> fusion_eer;  // same conditions, learned fusion
};
SweepResult sweep_interpolation(const ExperimentConfig& cfg,
                                const std::string& checkpoint_path,
                                const std::string& manifest_path,
                                const std::string& trials_path,
                                const std::vector<std::string>& conditions,
                                const std::vector<double>& weights,
                                const std::string& out_csv = "",
                                const std::string& out_svg = "");

// --------------------------------------------------------------------------
// Ablation arms: named deltas on a base config.

std::vector<std::string> ablation_arms();
ExperimentConfig apply_arm(const ExperimentConfig& base, const std::string& arm);

// Trains every arm (sharing the pretrained encoder and frozen enhancers) and
// writes `arm,condition,snr_db,eer` rows.
void run_ablation_matrix(const ExperimentConfig& base,
                         const std::vector<std::string>& arms,
                         const std::string& manifest_path,
                         const std::string& trials_path,
                         const std::vector<std::string>& conditions,
                         const std::string& out_csv);

}  // namespace ufema

#endif  // UFEMA_CORE_TRAINING_HPP_
