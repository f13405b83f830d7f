// core/training.cpp

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

#include "core/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include <fcntl.h>
#include <unistd.h>

#include <chrono>

#include "core/checkpoint.hpp"
#include "core/nn/adam.hpp"
#include "core/plot.hpp"

namespace fs = std::filesystem;

namespace ufema {

namespace {

constexpr NoiseKind kNoiseKinds[] = {NoiseKind::kNoise, NoiseKind::kMusic,
                                     NoiseKind::kBabble};

struct TrainSet {
  Manifest manifest;
  std::vector<Waveform> waves;       // aligned with manifest.entries
  std::vector<int> labels;           // dense speaker index per utterance
  std::vector<int> speaker_ids;      // sorted unique ids; label -> id
};

TrainSet load_train_set(const ExperimentConfig& cfg) {
  const auto paths = corpus_paths(corpus_dir(cfg));
  require(fs::exists(paths.manifest_train), ErrorCode::kIoError,
          "train manifest not found; synthesize the corpus first: " +
              paths.manifest_train);
  TrainSet ts;
  ts.manifest = load_manifest(paths.manifest_train);
  std::set<int> ids;
  for (const auto& e : ts.manifest.entries) ids.insert(e.speaker_id);
  ts.speaker_ids.assign(ids.begin(), ids.end());
  for (const auto& e : ts.manifest.entries) {
    ts.waves.push_back(load_wav(ts.manifest.dir + "/" + e.rel_path));
    const auto it = std::lower_bound(ts.speaker_ids.begin(), ts.speaker_ids.end(),
                                     e.speaker_id);
    ts.labels.push_back(static_cast<int>(it - ts.speaker_ids.begin()));
  }
  return ts;
}

std::vector<std::unique_ptr<Enhancer>> load_enhancers(const ExperimentConfig& cfg) {
  std::vector<std::unique_ptr<Enhancer>> out;
  for (const auto& path : enhancer_paths(cfg)) out.push_back(load_enhancer(path));
  return out;
}

// Log-mel stack for one waveform: optional raw channel plus each enhancer's
// output, in registry order.
MultiChannelFeature make_stack(const Waveform& w,
                               const std::vector<std::unique_ptr<Enhancer>>& enhancers,
                               const ExperimentConfig& cfg) {
  const FeatureConfig fc = cfg.feature_config();
  std::vector<MelFeature> enhanced;
  enhanced.reserve(enhancers.size());
  for (const auto& e : enhancers) enhanced.push_back(log_mel(e->enhance(w), fc));
  if (cfg.use_noisy_channel) return stack_channels(log_mel(w, fc), enhanced);
  require_arg(!enhanced.empty(), "stack would be empty: no raw channel, no enhancers");
  return stack_channels(enhanced[0],
                        {enhanced.begin() + 1, enhanced.end()});
}

nn::Tensor<float> batch_stacks(const std::vector<MultiChannelFeature>& stacks) {
  const int n = static_cast<int>(stacks.size());
  const int c = stacks[0].n_channels(), t = stacks[0].t(), f = stacks[0].f();
  nn::Tensor<float> x({n, c, t, f});
  for (int i = 0; i < n; ++i) {
    require_arg(stacks[i].n_channels() == c && stacks[i].t() == t &&
                    stacks[i].f() == f,
                "inconsistent stack shapes in batch");
    for (int ch = 0; ch < c; ++ch)
      std::copy(stacks[i].channels[ch].values.begin(),
                stacks[i].channels[ch].values.end(),
                x.v.begin() + ((size_t(i) * c + ch) * t) * f);
  }
  return x;
}

// Fused [N,1,T,F] -> mean-normalized encoder input [N,F,T].
nn::Tensor<float> cmn_transpose(const nn::Tensor<float>& y) {
  const int n = y.dim(0), t = y.dim(2), f = y.dim(3);
  nn::Tensor<float> x({n, f, t});
  for (int i = 0; i < n; ++i)
    for (int b = 0; b < f; ++b) {
      double mu = 0.0;
      for (int j = 0; j < t; ++j) mu += y.v[(size_t(i) * t + j) * f + b];
      mu /= t;
      for (int j = 0; j < t; ++j)
        x.v[(size_t(i) * f + b) * t + j] =
            static_cast<float>(y.v[(size_t(i) * t + j) * f + b] - mu);
    }
  return x;
}

// Adjoint of cmn_transpose.
nn::Tensor<float> cmn_transpose_backward(const nn::Tensor<float>& dx, int t, int f) {
  const int n = dx.dim(0);
  nn::Tensor<float> dy({n, 1, t, f});
  for (int i = 0; i < n; ++i)
    for (int b = 0; b < f; ++b) {
      double mu = 0.0;
      for (int j = 0; j < t; ++j) mu += dx.v[(size_t(i) * f + b) * t + j];
      mu /= t;
      for (int j = 0; j < t; ++j)
        dy.v[(size_t(i) * t + j) * f + b] =
            static_cast<float>(dx.v[(size_t(i) * f + b) * t + j] - mu);
    }
  return dy;
}

MelFeature cmn_single(const MelFeature& m) { return mean_normalize(m); }

// [1,F,T] tensor from a (already normalized) T x F feature.
nn::Tensor<float> to_encoder_input(const MelFeature& m) {
  nn::Tensor<float> x({1, m.f, m.t});
  for (int b = 0; b < m.f; ++b)
    for (int j = 0; j < m.t; ++j) x.v[size_t(b) * m.t + j] = m.at(j, b);
  return x;
}

std::vector<float> run_encoder_eval(SpeakerEncoder<float>* enc, const MelFeature& m) {
  nn::Tensor<float> emb = enc->forward(to_encoder_input(cmn_single(m)), false);
  return emb.v;
}

std::vector<ConditionResult> score_conditions(
    const std::vector<Trial>& trials, const std::vector<std::string>& conditions,
    const std::function<std::vector<float>(const std::string&, const NoiseCondition&)>&
        embed_fn) {
  std::vector<ConditionResult> out;
  for (const auto& desc : conditions) {
    const NoiseCondition cond = NoiseCondition::parse(desc, Pool::kTest);
    std::map<std::string, std::vector<float>> cache;
    auto emb = [&](const std::string& utt) -> const std::vector<float>& {
      auto it = cache.find(utt);
      if (it == cache.end()) it = cache.emplace(utt, embed_fn(utt, cond)).first;
      return it->second;
    };
    std::vector<std::pair<double, bool>> scored;
    ConditionResult r;
    r.condition = desc;
    r.is_clean = cond.kind == NoiseKind::kClean;
    if (!r.is_clean) r.snr_db = *cond.snr_db;
    for (const auto& t : trials) {
      scored.push_back({cosine_score(emb(t.utt_a), emb(t.utt_b)), t.target});
      (t.target ? r.n_target : r.n_nontarget)++;
    }
    r.eer = compute_eer(scored);
    out.push_back(std::move(r));
  }
  return out;
}

struct PretrainedEncoder {
  std::vector<float> enc_flat;
  std::vector<float> aam_w;
};

// One writer per run directory. Stale locks from crashed runs must be
// removed by hand; the error message says which file.
class RunLock {
 public:
  explicit RunLock(const std::string& dir) : path_(dir + "/.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    require(fd_ >= 0, ErrorCode::kIoError,
            "run directory is locked by another writer (remove " + path_ +
                " if no run is active)");
  }
  ~RunLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

// Unweighted mean over the per-condition rows, mirroring the usual
// results-table average column.
void append_average_row(std::vector<ConditionResult>* rows) {
  if (rows->empty()) return;
  ConditionResult avg;
  avg.condition = "average";
  avg.is_clean = true;  // no single SNR applies
  for (const auto& r : *rows) {
    avg.eer += r.eer;
    avg.n_target += r.n_target;
    avg.n_nontarget += r.n_nontarget;
  }
  avg.eer /= rows->size();
  rows->push_back(std::move(avg));
}

void load_aam_w(AamHead<float>* aam, const std::vector<float>& v) {
  require(v.size() == aam->weight().value.v.size(), ErrorCode::kFormatError,
          "class-weight tensor size mismatch");
  aam->weight().value.v = v;
}

PretrainedEncoder load_pretrained(const ExperimentConfig& cfg) {
  const std::string path = pretrained_encoder_path(cfg);
  require(fs::exists(path), ErrorCode::kIoError,
          "pretrained encoder not found; run pretraining first: " + path);
  CheckpointFile ck = CheckpointFile::load(path);
  require(ck.meta("kind") == "pretrain", ErrorCode::kFormatError,
          "not a pretrained encoder checkpoint: " + path);
  return {ck.tensor("enc"), ck.tensor("aam.w")};
}

}  // namespace

// ---------------------------------------------------------------------------
// Paths

std::string corpus_dir(const ExperimentConfig& cfg) { return cfg.data_dir + "/corpus"; }
std::string enhancer_dir(const ExperimentConfig& cfg) {
  return cfg.data_dir + "/enhancers";
}
std::string pretrained_encoder_path(const ExperimentConfig& cfg) {
  return cfg.data_dir + "/encoder_pretrained.ck";
}
std::string run_dir(const ExperimentConfig& cfg) {
  return cfg.runs_dir + "/" + cfg.run_id;
}
std::string joint_checkpoint_path(const ExperimentConfig& cfg) {
  return run_dir(cfg) + "/joint.ck";
}

std::vector<std::string> enhancer_paths(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& name : cfg.enabled_enhancers) {
    const std::string p = enhancer_dir(cfg) + "/" + name + ".ck";
    require(fs::exists(p), ErrorCode::kIoError,
            "enhancer not found; train enhancers first: " + p);
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stage 1: enhancers

EnhancerTrainReport train_enhancers(const ExperimentConfig& cfg) {
  fs::create_directories(enhancer_dir(cfg));
  const StftConfig stft = cfg.feature_config().stft(cfg.sample_rate);

  make_spectral_subtraction(cfg.enh_specsub_oversub, cfg.enh_specsub_floor, stft)
      ->save(enhancer_dir(cfg) + "/specsub.ck");

  // Mask network training pairs: train utterances corrupted with train-pool
  // noise at the configured SNRs.
  TrainSet ts = load_train_set(cfg);
  NoisePoolRegistry reg;
  Rng rng(mix_seed(cfg.seed, 0x454e4854ULL));
  std::vector<NoiseKind> kinds;
  for (const auto& k : cfg.enh_noise_kinds)
    kinds.push_back(noise_kind_from_name(k));
  std::vector<std::pair<Waveform, Waveform>> pairs;
  for (int i = 0; i < cfg.enh_train_pairs; ++i) {
    const Waveform& clean = ts.waves[rng.uniform_int(ts.waves.size())];
    const NoiseKind kind = kinds[rng.uniform_int(kinds.size())];
    const double snr = cfg.train_snrs[rng.uniform_int(cfg.train_snrs.size())];
    const uint64_t seed =
        reg.seed_for(Pool::kTrain, kind, rng.uniform_int(NoisePoolRegistry::kPoolSpan));
    const Waveform noise =
        synth_noise(kind, cfg.utt_duration_s, seed, cfg.sample_rate);
    pairs.push_back({mix_at_snr(clean, noise, snr), clean});
  }
  MaskTrainConfig mc;
  mc.hidden = cfg.enh_mask_hidden;
  mc.epochs = cfg.enh_epochs;
  mc.lr = cfg.enh_lr;
  mc.batch = cfg.enh_batch;
  mc.seed = cfg.seed;
  mc.stft = stft;
  EnhancerTrainReport report;
  auto mask = train_mask_enhancer(pairs, mc, &report.mask_epoch_loss);
  mask->save(enhancer_dir(cfg) + "/masknet.ck");
  return report;
}

// ---------------------------------------------------------------------------
// Stage 2: encoder pretraining

PretrainReport pretrain_encoder(const ExperimentConfig& cfg) {
  TrainSet ts = load_train_set(cfg);
  const int n = static_cast<int>(ts.waves.size());
  const FeatureConfig fc = cfg.feature_config();

  // Clean log-mels with per-utterance mean normalization, cached across
  // epochs as encoder-layout [F, T] planes.
  std::vector<nn::Tensor<float>> feats;
  feats.reserve(n);
  int frames = 0;
  for (const auto& w : ts.waves) {
    const MelFeature m = cmn_single(log_mel(w, fc));
    frames = m.t;
    feats.push_back(to_encoder_input(m));
  }

  SpeakerEncoder<float> enc(cfg.encoder_config());
  enc.init(cfg.seed);
  AamHead<float> aam(static_cast<int>(ts.speaker_ids.size()), cfg.emb_dim,
                     cfg.aam_config());
  aam.init(cfg.seed);

  std::vector<nn::Param<float>*> params = enc.params();
  params.push_back(&aam.weight());
  nn::Adam<float> opt(params, cfg.pretrain_lr);

  Rng rng(mix_seed(cfg.seed, 0x50524531ULL));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  PretrainReport report;
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
    double epoch_loss = 0.0;
    int n_batches = 0, correct = 0, seen = 0;
    for (int start = 0; start + 2 <= n; start += cfg.pretrain_batch) {
      const int bs = std::min(cfg.pretrain_batch, n - start);
      if (bs < 2) break;  // train-mode batchnorm needs >= 2
      nn::Tensor<float> x({bs, cfg.n_mels, frames});
      std::vector<int> labels(bs);
      for (int i = 0; i < bs; ++i) {
        const int j = order[start + i];
        std::copy(feats[j].v.begin(), feats[j].v.end(),
                  x.v.begin() + size_t(i) * cfg.n_mels * frames);
        labels[i] = ts.labels[j];
      }
      for (auto* p : params) p->zero_grad();
      nn::Tensor<float> emb = enc.forward(x, true);
      nn::Tensor<float> demb;
      std::vector<int> pred;
      const double loss = aam.loss(emb, labels, &demb, &pred);
      require(std::isfinite(loss), ErrorCode::kTrainingFailure,
              "pretraining loss diverged at epoch " + std::to_string(epoch));
      enc.backward(demb);
      opt.step();
      epoch_loss += loss;
      ++n_batches;
      for (int i = 0; i < bs; ++i) correct += pred[i] == labels[i];
      seen += bs;
    }
    report.epoch_loss.push_back(epoch_loss / n_batches);
    report.train_accuracy = double(correct) / seen;
  }

  fs::create_directories(cfg.data_dir);
  CheckpointFile ck;
  ck.set_meta("kind", "pretrain");
  ck.set_meta("n_speakers", std::to_string(ts.speaker_ids.size()));
  ck.set_meta("emb_dim", std::to_string(cfg.emb_dim));
  ck.add_tensor("enc", enc.flatten());
  ck.add_tensor("aam.w", aam.weight().value.v);
  ck.save(pretrained_encoder_path(cfg));
  return report;
}

// ---------------------------------------------------------------------------
// Stage 3: joint training

JointTrainReport train_joint(const ExperimentConfig& cfg, int64_t max_steps) {
  cfg.validate();
  TrainSet ts = load_train_set(cfg);
  auto enhancers = load_enhancers(cfg);
  const int n = static_cast<int>(ts.waves.size());
  const int n_speakers = static_cast<int>(ts.speaker_ids.size());

  // Deterministic train-pool noise cache, independent of the sampler RNG so
  // resumed runs see identical clips.
  NoisePoolRegistry reg;
  std::vector<std::vector<Waveform>> noise_cache(3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < cfg.noise_cache_per_kind; ++i)
      noise_cache[k].push_back(synth_noise(
          kNoiseKinds[k], cfg.utt_duration_s,
          reg.seed_for(Pool::kTrain, kNoiseKinds[k], uint64_t(i)), cfg.sample_rate));
  reg.verify_disjoint();

  UNet<float> unet(cfg.unet_config());
  unet.init(cfg.seed);
  SpeakerEncoder<float> enc(cfg.encoder_config());
  AamHead<float> aam(n_speakers, cfg.emb_dim, cfg.aam_config());

  const PretrainedEncoder pre = load_pretrained(cfg);
  if (cfg.encoder_mode == EncoderMode::kScratch) {
    enc.init(mix_seed(cfg.seed, 0x53435241ULL));
    aam.init(cfg.seed);
  } else {
    enc.load_flat(pre.enc_flat);
    load_aam_w(&aam, pre.aam_w);
  }
  EmaState ema = EmaState::init(enc.flatten(), cfg.ema_alpha);

  std::vector<nn::Param<float>*> params = unet.params();
  params.push_back(&aam.weight());
  if (cfg.encoder_mode != EncoderMode::kFixed)
    for (auto* p : enc.params()) params.push_back(p);
  nn::Adam<float> opt(params, cfg.lr);

  const int64_t steps_per_epoch = std::max<int64_t>(1, n / cfg.batch_size);
  const int64_t total_steps = steps_per_epoch * cfg.epochs;
  Rng rng(mix_seed(cfg.seed, 0x4a4f494eULL));
  int64_t step = 0;

  // Enhancers are frozen: pin their parameter hashes and refuse to resume a
  // run whose enhancer files changed underneath it.
  std::vector<uint64_t> enh_hashes;
  for (const auto& e : enhancers) enh_hashes.push_back(e->params_hash());

  fs::create_directories(run_dir(cfg));
  RunLock lock(run_dir(cfg));
  const auto t_start = std::chrono::steady_clock::now();

  // Snapshot the exact config driving this run.
  {
    std::ofstream f(run_dir(cfg) + "/config.txt", std::ios::trunc);
    require(f.good(), ErrorCode::kIoError, "cannot snapshot config");
    f << cfg.to_string();
  }
  const std::string ckpt_path = joint_checkpoint_path(cfg);

  auto save_ckpt = [&]() {
    CheckpointFile ck;
    ck.set_meta("kind", "joint");
    ck.set_meta("config_hash", std::to_string(cfg.config_hash()));
    ck.set_meta("step", std::to_string(step));
    ck.set_meta("total_steps", std::to_string(total_steps));
    ck.set_meta("adam_t", std::to_string(opt.step_count()));
    ck.set_meta("ema_step", std::to_string(ema.step));
    ck.set_meta("ema_alpha", std::to_string(ema.alpha));
    ck.set_meta("encoder_mode", encoder_mode_name(cfg.encoder_mode));
    ck.set_meta("n_speakers", std::to_string(n_speakers));
    ck.set_meta("rng", rng.serialize());
    for (size_t i = 0; i < enhancers.size(); ++i)
      ck.set_meta("enh_hash_" + enhancers[i]->name(), std::to_string(enh_hashes[i]));
    ck.add_tensor("unet", unet.flatten());
    ck.add_tensor("enc_model", enc.flatten());
    ck.add_tensor("enc_ema", ema.theta_ema);
    ck.add_tensor("aam.w", aam.weight().value.v);
    ck.add_tensor("adam", opt.state_flat());
    ck.save(ckpt_path);
  };

  if (fs::exists(ckpt_path)) {
    CheckpointFile ck = CheckpointFile::load(ckpt_path);
    require(ck.meta("kind") == "joint", ErrorCode::kFormatError,
            "not a joint checkpoint: " + ckpt_path);
    require(ck.meta("config_hash") == std::to_string(cfg.config_hash()),
            ErrorCode::kInvalidArgument,
            "checkpoint was trained under a different config: " + ckpt_path);
    for (size_t i = 0; i < enhancers.size(); ++i)
      require(ck.meta("enh_hash_" + enhancers[i]->name()) ==
                  std::to_string(enh_hashes[i]),
              ErrorCode::kCorruption,
              "frozen enhancer `" + enhancers[i]->name() +
                  "` changed since the checkpoint was written");
    unet.load_flat(ck.tensor("unet"));
    enc.load_flat(ck.tensor("enc_model"));
    ema.theta_model = ck.tensor("enc_model");
    ema.theta_ema = ck.tensor("enc_ema");
    ema.step = ck.meta_int("ema_step");
    load_aam_w(&aam, ck.tensor("aam.w"));
    opt.load_state_flat(ck.tensor("adam"), ck.meta_int("adam_t"));
    rng.deserialize(ck.meta("rng"));
    step = ck.meta_int("step");
  }

  JointTrainReport report;
  report.total_steps = total_steps;
  const int64_t stop =
      max_steps < 0 ? total_steps : std::min(total_steps, step + max_steps);
  while (step < stop) {
    std::vector<MultiChannelFeature> stacks(cfg.batch_size);
    std::vector<int> labels(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) {
      const size_t j = rng.uniform_int(n);
      labels[i] = ts.labels[j];
      Waveform w = ts.waves[j];
      if (rng.uniform() >= cfg.clean_fraction) {
        const int k = static_cast<int>(rng.uniform_int(3));
        const double snr = cfg.train_snrs[rng.uniform_int(cfg.train_snrs.size())];
        const Waveform& noise = noise_cache[k][rng.uniform_int(noise_cache[k].size())];
        w = mix_at_snr(w, noise, snr);
      }
      w = truncate_segment(w, cfg.segment_s, rng.raw(), TruncatePolicy::kReflectPad);
      stacks[i] = make_stack(w, enhancers, cfg);
    }
    nn::Tensor<float> x = batch_stacks(stacks);
    const int t = x.dim(2), f = x.dim(3);

    PadSpec<float> pad;
    nn::Tensor<float> fused = fuse_forward(&unet, x, true, &pad);
    nn::Tensor<float> xin = cmn_transpose(fused);
    const bool enc_train = cfg.encoder_mode != EncoderMode::kFixed;
    nn::Tensor<float> emb = enc.forward(xin, enc_train);

    for (auto* p : params) p->zero_grad();
    nn::Tensor<float> demb;
    const double loss = aam.loss(emb, labels, &demb);
    require(std::isfinite(loss), ErrorCode::kTrainingFailure,
            "joint loss diverged at step " + std::to_string(step));
    nn::Tensor<float> dxin = enc.backward(demb);
    nn::Tensor<float> dfused = cmn_transpose_backward(dxin, t, f);
    fuse_backward(&unet, dfused, pad);
    opt.step();

    if (cfg.encoder_mode == EncoderMode::kEma) {
      ema.theta_model = enc.flatten();
      ema.update();
    } else {
      // No smoothing: the shadow tracks the live weights exactly so the
      // checkpoint always carries both copies.
      ema.theta_model = enc.flatten();
      ema.theta_ema = ema.theta_model;
    }

    report.step_loss.push_back(loss);
    ++report.steps_run;
    ++step;
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && step < stop)
      save_ckpt();
  }
  save_ckpt();

  // Step-loss log (appended across resumed invocations) and run manifest.
  {
    std::ofstream log(run_dir(cfg) + "/train_log.txt", std::ios::app);
    int64_t s = step - report.steps_run;
    for (double l : report.step_loss)
      log << "step " << s++ << " loss " << l << " lr " << cfg.lr << "\n";
  }
  {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    std::ofstream mf(run_dir(cfg) + "/run_manifest.txt", std::ios::trunc);
    mf << "run_id " << cfg.run_id << "\n"
       << "config_hash " << cfg.config_hash() << "\n"
       << "step " << step << "\n"
       << "total_steps " << total_steps << "\n"
       << "artifact config.txt\n"
       << "artifact train_log.txt\n"
       << "artifact joint.ck\n"
       << "wall_seconds " << secs << "\n";
  }
  report.checkpoint = ckpt_path;
  return report;
}

// ---------------------------------------------------------------------------
// Trained bundle

JointModel JointModel::load(const std::string& checkpoint_path,
                            const ExperimentConfig& cfg) {
  CheckpointFile ck = CheckpointFile::load(checkpoint_path);
  require(ck.meta("kind") == "joint", ErrorCode::kFormatError,
          "not a joint checkpoint: " + checkpoint_path);
  JointModel m;
  m.cfg_ = cfg;
  m.unet_ = std::make_unique<UNet<float>>(cfg.unet_config());
  m.unet_->load_flat(ck.tensor("unet"));
  m.encoder_ = std::make_unique<SpeakerEncoder<float>>(cfg.encoder_config());
  m.encoder_->load_flat(cfg.eval_copy == EvalCopy::kEma ? ck.tensor("enc_ema")
                                                        : ck.tensor("enc_model"));
  m.enhancers_ = load_enhancers(cfg);
  return m;
}

Waveform linear_interp_baseline(double w, const Waveform& noisy,
                                const Waveform& enhanced) {
  require_arg(w >= 0.0 && w <= 1.0, "interpolation weight outside [0, 1]");
  require_arg(noisy.samples.size() == enhanced.samples.size() &&
                  noisy.sample_rate == enhanced.sample_rate,
              "interpolation inputs must be aligned");
  Waveform out = noisy;
  const float wf = static_cast<float>(w);
  for (size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = wf * enhanced.samples[i] + (1.f - wf) * noisy.samples[i];
  return out;
}

Waveform corrupt_for_eval(const Waveform& clean, const std::string& utt_id,
                          const NoiseCondition& cond, const ExperimentConfig& cfg) {
  cond.validate();
  require_arg(cond.pool == Pool::kTest, "evaluation must draw test-pool noise");
  if (cond.kind == NoiseKind::kClean) return clean;
  NoisePoolRegistry reg;
  const uint64_t idx = fnv1a64(utt_id + "|" + cond.descriptor()) %
                       NoisePoolRegistry::kPoolSpan;
  const double dur = double(clean.samples.size()) / clean.sample_rate;
  const Waveform noise = synth_noise(
      cond.kind, dur, reg.seed_for(Pool::kTest, cond.kind, idx), clean.sample_rate);
  return mix_at_snr(clean, noise, *cond.snr_db);
}

MelFeature JointModel::fuse_waveform(const Waveform& w) {
  return fuse(unet_.get(), make_stack(w, enhancers_, cfg_));
}

std::vector<float> JointModel::embed(const Waveform& clean, const std::string& utt_id,
                                     const NoiseCondition& cond) {
  const Waveform w = corrupt_for_eval(clean, utt_id, cond, cfg_);
  return run_encoder_eval(encoder_.get(), fuse_waveform(w));
}

// ---------------------------------------------------------------------------
// Stage 4: evaluation

std::vector<ConditionResult> evaluate_conditions(
    const ExperimentConfig& cfg, const std::string& checkpoint_path,
    const std::string& manifest_path, const std::string& trials_path,
    const std::vector<std::string>& conditions, const std::string& out_csv) {
  JointModel model = JointModel::load(checkpoint_path, cfg);
  const Manifest man = load_manifest(manifest_path);
  const std::vector<Trial> trials = load_trials(trials_path);

  std::map<std::string, Waveform> waves;
  auto clean_wave = [&](const std::string& utt) -> const Waveform& {
    auto it = waves.find(utt);
    if (it == waves.end())
      it = waves.emplace(utt, load_wav(man.dir + "/" + man.find(utt).rel_path)).first;
    return it->second;
  };

  auto rows = score_conditions(
      trials, conditions, [&](const std::string& utt, const NoiseCondition& cond) {
        return model.embed(clean_wave(utt), utt, cond);
      });
  append_average_row(&rows);
  if (!out_csv.empty()) write_results_csv(out_csv, rows);
  return rows;
}

std::vector<ConditionResult> evaluate_pretrained_baseline(
    const ExperimentConfig& cfg, const std::string& manifest_path,
    const std::string& trials_path, const std::vector<std::string>& conditions) {
  const PretrainedEncoder pre = load_pretrained(cfg);
  SpeakerEncoder<float> enc(cfg.encoder_config());
  enc.load_flat(pre.enc_flat);
  const FeatureConfig fc = cfg.feature_config();
  const Manifest man = load_manifest(manifest_path);
  const std::vector<Trial> trials = load_trials(trials_path);

  std::map<std::string, Waveform> waves;
  auto rows = score_conditions(
      trials, conditions, [&](const std::string& utt, const NoiseCondition& cond) {
        auto it = waves.find(utt);
        if (it == waves.end())
          it = waves.emplace(utt, load_wav(man.dir + "/" + man.find(utt).rel_path))
                   .first;
        const Waveform w = corrupt_for_eval(it->second, utt, cond, cfg);
        return run_encoder_eval(&enc, log_mel(w, fc));
      });
  append_average_row(&rows);
  return rows;
}

SweepResult sweep_interpolation(const ExperimentConfig& cfg,
                                const std::string& checkpoint_path,
                                const std::string& manifest_path,
                                const std::string& trials_path,
                                const std::vector<std::string>& conditions,
                                const std::vector<double>& weights,
                                const std::string& out_csv,
                                const std::string& out_svg) {
  require_arg(!weights.empty(), "empty weight grid");
  for (double w : weights)
    require_arg(w >= 0.0 && w <= 1.0, "interpolation weight outside [0, 1]");

  const Manifest man = load_manifest(manifest_path);
  const std::vector<Trial> trials = load_trials(trials_path);
  auto enhancers = load_enhancers(cfg);
  require_arg(!enhancers.empty(), "interpolation sweep needs enhancers");

  // The fixed-weight baseline scores with the pretrained encoder; the
  // learned fusion line comes from the joint checkpoint.
  const PretrainedEncoder pre = load_pretrained(cfg);
  SpeakerEncoder<float> enc(cfg.encoder_config());
  enc.load_flat(pre.enc_flat);
  const FeatureConfig fc = cfg.feature_config();

  SweepResult res;
  res.weights = weights;
  res.conditions = conditions;
  res.eer.assign(weights.size(), std::vector<double>(conditions.size(), 0.0));

  std::map<std::string, Waveform> waves;
  auto clean_wave = [&](const std::string& utt) -> const Waveform& {
    auto it = waves.find(utt);
    if (it == waves.end())
      it = waves.emplace(utt, load_wav(man.dir + "/" + man.find(utt).rel_path)).first;
    return it->second;
  };

  for (size_t ci = 0; ci < conditions.size(); ++ci) {
    const NoiseCondition cond = NoiseCondition::parse(conditions[ci], Pool::kTest);
    // Per-utterance signals shared across the weight grid; the N enhancer
    // outputs are averaged into one enhanced signal before interpolation.
    std::map<std::string, std::pair<Waveform, Waveform>> sigs;  // noisy, mean(enh)
    auto sig = [&](const std::string& utt) -> const std::pair<Waveform, Waveform>& {
      auto it = sigs.find(utt);
      if (it == sigs.end()) {
        Waveform noisy = corrupt_for_eval(clean_wave(utt), utt, cond, cfg);
        Waveform mean_enh;
        for (size_t e = 0; e < enhancers.size(); ++e) {
          Waveform y = enhancers[e]->enhance(noisy);
          if (e == 0) {
            mean_enh = std::move(y);
          } else {
            for (size_t i = 0; i < y.samples.size(); ++i)
              mean_enh.samples[i] += y.samples[i];
          }
        }
        for (auto& v : mean_enh.samples)
          v /= static_cast<float>(enhancers.size());
        it = sigs.emplace(utt, std::make_pair(std::move(noisy), std::move(mean_enh)))
                 .first;
      }
      return it->second;
    };

    for (size_t wi = 0; wi < weights.size(); ++wi) {
      std::map<std::string, std::vector<float>> cache;
      auto emb = [&](const std::string& utt) -> const std::vector<float>& {
        auto it = cache.find(utt);
        if (it == cache.end()) {
          const auto& [noisy, mean_enh] = sig(utt);
          const Waveform mix = linear_interp_baseline(weights[wi], noisy, mean_enh);
          it = cache.emplace(utt, run_encoder_eval(&enc, log_mel(mix, fc))).first;
        }
        return it->second;
      };
      std::vector<std::pair<double, bool>> scored;
      for (const auto& t : trials)
        scored.push_back({cosine_score(emb(t.utt_a), emb(t.utt_b)), t.target});
      res.eer[wi][ci] = compute_eer(scored);
    }
  }

  // Learned fusion reference on the same trials/conditions (drop the
  // trailing average row).
  auto fusion_rows = evaluate_conditions(cfg, checkpoint_path, manifest_path,
                                         trials_path, conditions);
  for (size_t ci = 0; ci < conditions.size(); ++ci)
    res.fusion_eer.push_back(fusion_rows[ci].eer);

  if (!out_csv.empty()) {
    std::ofstream f(out_csv, std::ios::trunc);
    require(f.good(), ErrorCode::kIoError, "cannot write sweep csv: " + out_csv);
    f << "weight,condition,snr_db,eer\n";
    for (size_t wi = 0; wi < weights.size(); ++wi)
      for (size_t ci = 0; ci < conditions.size(); ++ci) {
        const NoiseCondition c = NoiseCondition::parse(conditions[ci], Pool::kTest);
        f << weights[wi] << ',' << conditions[ci] << ',';
        if (c.kind != NoiseKind::kClean) f << *c.snr_db;
        f << ',' << res.eer[wi][ci] << '\n';
      }
    for (size_t ci = 0; ci < conditions.size(); ++ci) {
      const NoiseCondition c = NoiseCondition::parse(conditions[ci], Pool::kTest);
      f << "fusion," << conditions[ci] << ',';
      if (c.kind != NoiseKind::kClean) f << *c.snr_db;
      f << ',' << res.fusion_eer[ci] << '\n';
    }
  }
  if (!out_svg.empty()) {
    std::vector<PlotSeries> series;
    std::vector<PlotHLine> hlines;
    for (size_t ci = 0; ci < conditions.size(); ++ci) {
      PlotSeries s;
      s.label = conditions[ci];
      for (size_t wi = 0; wi < weights.size(); ++wi) {
        s.x.push_back(weights[wi]);
        s.y.push_back(res.eer[wi][ci]);
      }
      series.push_back(std::move(s));
      hlines.push_back({"fusion " + conditions[ci], res.fusion_eer[ci]});
    }
    write_svg_plot(out_svg, "Fixed-weight interpolation vs learned fusion",
                   "interpolation weight", "EER", series, hlines);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Ablations

// The seven study arms: the full system, channel removals, and the three
// alternative encoder regimes.
std::vector<std::string> ablation_arms() {
  return {"all",   "no_noisy", "no_specsub", "no_masknet",
          "fixed", "scratch",  "finetune"};
}

ExperimentConfig apply_arm(const ExperimentConfig& base, const std::string& arm) {
  ExperimentConfig cfg = base;
  cfg.run_id = base.run_id + "_" + arm;
  if (arm == "all") {
    cfg.encoder_mode = EncoderMode::kEma;
    cfg.eval_copy = EvalCopy::kEma;
  } else if (arm == "no_noisy") {
    cfg.use_noisy_channel = false;
  } else if (arm == "no_specsub" || arm == "no_masknet") {
    const std::string drop = arm.substr(3);
    std::vector<std::string> keep;
    for (const auto& e : cfg.enabled_enhancers)
      if (e != drop) keep.push_back(e);
    require_arg(keep.size() < cfg.enabled_enhancers.size(),
                "arm " + arm + " drops an enhancer that is not enabled");
    cfg.enabled_enhancers = keep;
  } else if (arm == "fixed") {
    cfg.encoder_mode = EncoderMode::kFixed;
    cfg.eval_copy = EvalCopy::kModel;
  } else if (arm == "scratch") {
    cfg.encoder_mode = EncoderMode::kScratch;
    cfg.eval_copy = EvalCopy::kModel;
  } else if (arm == "finetune") {
    cfg.encoder_mode = EncoderMode::kFinetune;
    cfg.eval_copy = EvalCopy::kModel;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown ablation arm: " + arm);
  }
  cfg.validate();
  return cfg;
}

void run_ablation_matrix(const ExperimentConfig& base,
                         const std::vector<std::string>& arms,
                         const std::string& manifest_path,
                         const std::string& trials_path,
                         const std::vector<std::string>& conditions,
                         const std::string& out_csv) {
  std::ofstream f(out_csv, std::ios::trunc);
  require(f.good(), ErrorCode::kIoError, "cannot write ablation csv: " + out_csv);
  f << "arm,condition,snr_db,eer\n";
  for (const auto& arm : arms) {
    const ExperimentConfig cfg = apply_arm(base, arm);
    const JointTrainReport tr = train_joint(cfg);
    const auto rows = evaluate_conditions(cfg, tr.checkpoint, manifest_path,
                                          trials_path, conditions);
    for (const auto& r : rows) {
      f << arm << ',' << r.condition << ',';
      if (!r.is_clean) f << r.snr_db;
      f << ',' << r.eer << '\n';
    }
    f.flush();
  }
}

}  // namespace ufema
