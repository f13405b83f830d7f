// tests/test_pipeline.cpp - end-to-end integration on a downsized setup:
// staged artifacts, bit-exact determinism and resume, evaluation and the
// interpolation sweep, run-directory bookkeeping.

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/training.hpp"
#include "doctest.h"

using namespace ufema;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// One tiny shared environment: corpus, frozen enhancers, pretrained encoder,
// and a finished joint run. Built once, reused by every test case.
struct Env {
  std::string root;
  ExperimentConfig cfg;
  CorpusPaths paths;
  JointTrainReport joint;

  Env() {
    root = (fs::temp_directory_path() / "ufema_pipeline").string();
    fs::remove_all(root);
    fs::create_directories(root);
    cfg = ExperimentConfig::from_string(
        "run_id = base\n"
        "seed = 1\n"
        "n_speakers = 6\n"
        "utts_per_speaker = 8\n"
        "test_utts_per_speaker = 3\n"
        "n_unseen_speakers = 2\n"
        "unseen_utts_per_speaker = 3\n"
        "utt_duration_s = 1.5\n"
        "segment_s = 1.0\n"
        "n_mels = 40\n"
        "unet_channels = 8,16\n"
        "enc_channels = 16\n"
        "enc_dilations = 1,2\n"
        "emb_dim = 32\n"
        "enh_mask_hidden = 24\n"
        "enh_epochs = 1\n"
        "enh_train_pairs = 10\n"
        "pretrain_epochs = 3\n"
        "pretrain_batch = 8\n"
        "epochs = 1\n"
        "batch_size = 8\n"
        "noise_cache_per_kind = 4\n");
    cfg.data_dir = root + "/data";
    cfg.runs_dir = root + "/runs";
    cfg.validate();
    paths = build_corpus(cfg.corpus_spec(), corpus_dir(cfg));
    train_enhancers(cfg);
    pretrain_encoder(cfg);
    joint = train_joint(cfg);
  }
};

Env& env() {
  static Env e;
  return e;
}

ExperimentConfig with_run(const ExperimentConfig& base, const std::string& run_id) {
  ExperimentConfig c = base;
  c.run_id = run_id;
  return c;
}

}  // namespace

TEST_CASE("staged artifacts exist and reload cleanly") {
  Env& e = env();
  CHECK(fs::exists(e.paths.manifest_train));
  CHECK(fs::exists(e.paths.trials_seen));

  const auto enh_paths = enhancer_paths(e.cfg);
  REQUIRE(enh_paths.size() == 2);
  auto specsub = load_enhancer(enh_paths[0]);
  auto masknet = load_enhancer(enh_paths[1]);
  CHECK(specsub->name() == "specsub");
  CHECK(masknet->name() == "masknet");

  const CheckpointFile pre = CheckpointFile::load(pretrained_encoder_path(e.cfg));
  CHECK(pre.meta("kind") == "pretrain");
  CHECK(pre.has_tensor("enc"));
  CHECK(pre.has_tensor("aam.w"));

  REQUIRE(e.joint.steps_run == 6);  // 48 utterances / batch 8, 1 epoch
  CHECK(e.joint.total_steps == 6);
  for (double l : e.joint.step_loss) CHECK(std::isfinite(l));
  CHECK(fs::exists(e.joint.checkpoint));
}

TEST_CASE("run directory bookkeeping: snapshot, log, manifest, lock") {
  Env& e = env();
  const std::string rd = run_dir(e.cfg);

  // Config snapshot reparses to the same hash.
  const ExperimentConfig snap = ExperimentConfig::from_file(rd + "/config.txt");
  CHECK(snap.config_hash() == e.cfg.config_hash());

  // train_log has one "step N loss L lr X" line per step.
  std::ifstream log(rd + "/train_log.txt");
  REQUIRE(log.good());
  std::string word;
  int lines = 0;
  for (std::string line; std::getline(log, line);) {
    std::istringstream is(line);
    int64_t step = -1;
    double loss = 0, lr = 0;
    std::string w1, w2, w3;
    is >> w1 >> step >> w2 >> loss >> w3 >> lr;
    CHECK(w1 == "step");
    CHECK(w2 == "loss");
    CHECK(w3 == "lr");
    CHECK(step == lines);
    CHECK(std::isfinite(loss));
    CHECK(lr == e.cfg.lr);
    ++lines;
  }
  CHECK(lines == 6);

  const std::string mf = slurp(rd + "/run_manifest.txt");
  CHECK(mf.find("run_id base") != std::string::npos);
  CHECK(mf.find("config_hash " + std::to_string(e.cfg.config_hash())) !=
        std::string::npos);
  CHECK(mf.find("artifact joint.ck") != std::string::npos);

  // The lock is released after a successful run; a stale one blocks writers.
  CHECK_FALSE(fs::exists(rd + "/.lock"));
  const ExperimentConfig locked = with_run(e.cfg, "lockcase");
  fs::create_directories(run_dir(locked));
  { std::ofstream(run_dir(locked) + "/.lock") << ""; }
  CHECK_THROWS_AS(train_joint(locked), Error);
  fs::remove(run_dir(locked) + "/.lock");
}

TEST_CASE("identical config + seed reproduces the checkpoint bit-for-bit") {
  Env& e = env();
  const std::string first = slurp(e.joint.checkpoint);

  // Re-run the same config from scratch in the same location.
  fs::remove_all(run_dir(e.cfg));
  const JointTrainReport again = train_joint(e.cfg);
  CHECK(slurp(again.checkpoint) == first);
  CHECK(again.step_loss == e.joint.step_loss);

  // A different seed diverges.
  ExperimentConfig other = with_run(e.cfg, "seed2");
  other.seed = 2;
  const JointTrainReport diverged = train_joint(other);
  const CheckpointFile a = CheckpointFile::load(e.joint.checkpoint);
  const CheckpointFile b = CheckpointFile::load(diverged.checkpoint);
  CHECK(a.tensor("unet") != b.tensor("unet"));
}

TEST_CASE("interrupted training resumes bit-exactly") {
  Env& e = env();
  const ExperimentConfig split = with_run(e.cfg, "split");
  const JointTrainReport part1 = train_joint(split, 2);
  CHECK(part1.steps_run == 2);
  const JointTrainReport part2 = train_joint(split, -1);
  CHECK(part2.steps_run == 4);

  // Strip the run-specific metadata difference: compare tensors and training
  // state against the uninterrupted baseline run.
  const CheckpointFile a = CheckpointFile::load(e.joint.checkpoint);
  const CheckpointFile b = CheckpointFile::load(part2.checkpoint);
  for (const char* t : {"unet", "enc_model", "enc_ema", "aam.w", "adam"})
    CHECK(a.tensor(t) == b.tensor(t));
  CHECK(a.meta("rng") == b.meta("rng"));
  CHECK(a.meta("step") == b.meta("step"));

  // Completed runs are a no-op to resume.
  const JointTrainReport done = train_joint(split, -1);
  CHECK(done.steps_run == 0);
}

TEST_CASE("frozen enhancers are pinned by hash") {
  Env& e = env();
  const auto enh_paths = enhancer_paths(e.cfg);
  const uint64_t before = load_enhancer(enh_paths[1])->params_hash();

  // Hash survives joint training (the backward pass never touches them).
  CHECK(load_enhancer(enh_paths[1])->params_hash() == before);

  // Tampering with a frozen enhancer blocks resuming.
  const std::string keep = slurp(enh_paths[1]);
  const ExperimentConfig tampered = with_run(e.cfg, "tamper");
  train_joint(tampered, 1);

  MaskTrainConfig mtc;
  mtc.hidden = e.cfg.enh_mask_hidden;
  mtc.epochs = 1;
  mtc.seed = 999;
  mtc.stft = e.cfg.feature_config().stft(e.cfg.sample_rate);
  const SpeakerSpec sp = make_speaker_spec(50, 7);
  const Waveform cl = synth_utterance(sp, 1.0, 4);
  const Waveform nz = synth_noise(NoiseKind::kNoise, 1.2, 60);
  train_mask_enhancer({{mix_at_snr(cl, nz, 0.0), cl}}, mtc)->save(enh_paths[1]);

  try {
    train_joint(tampered, 1);
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kCorruption);
    CHECK(std::string(err.what()).find("masknet") != std::string::npos);
  }
  { std::ofstream f(enh_paths[1], std::ios::binary | std::ios::trunc); f << keep; }
  CHECK(load_enhancer(enh_paths[1])->params_hash() == before);
}

TEST_CASE("fixed mode never moves the encoder weights") {
  Env& e = env();
  ExperimentConfig fixed = with_run(e.cfg, "fixedarm");
  fixed.encoder_mode = EncoderMode::kFixed;
  const JointTrainReport r = train_joint(fixed);

  const CheckpointFile pre = CheckpointFile::load(pretrained_encoder_path(e.cfg));
  const CheckpointFile ck = CheckpointFile::load(r.checkpoint);
  CHECK(ck.tensor("enc_model") == pre.tensor("enc"));
  CHECK(ck.tensor("enc_ema") == pre.tensor("enc"));

  // The EMA arm does move them.
  const CheckpointFile base = CheckpointFile::load(e.joint.checkpoint);
  CHECK(base.tensor("enc_model") != pre.tensor("enc"));
  CHECK(base.tensor("enc_ema") != pre.tensor("enc"));
  CHECK(base.tensor("enc_ema") != base.tensor("enc_model"));
}

TEST_CASE("evaluation: per-condition rows plus the average") {
  Env& e = env();
  const std::vector<std::string> conds = {"clean", "noise@0", "babble@-5"};
  const std::string csv = run_dir(e.cfg) + "/results.csv";
  const auto rows = evaluate_conditions(e.cfg, e.joint.checkpoint,
                                        e.paths.manifest_test_seen,
                                        e.paths.trials_seen, conds, csv);
  REQUIRE(rows.size() == 4);
  double mean = 0.0;
  for (size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].condition == conds[i]);
    CHECK(rows[i].eer >= 0.0);
    CHECK(rows[i].eer <= 1.0);
    CHECK(rows[i].n_target > 0);
    CHECK(rows[i].n_nontarget > 0);
    mean += rows[i].eer / 3.0;
  }
  CHECK(rows[3].condition == "average");
  CHECK(rows[3].eer == doctest::Approx(mean));

  const std::string text = slurp(csv);
  CHECK(text.find("condition,snr_db,eer,n_target,n_nontarget") == 0);
  CHECK(text.find("average") != std::string::npos);

  // Scoring is deterministic.
  const auto rows2 = evaluate_conditions(e.cfg, e.joint.checkpoint,
                                         e.paths.manifest_test_seen,
                                         e.paths.trials_seen, conds);
  for (size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].eer == rows2[i].eer);
}

TEST_CASE("interpolation sweep: w=0 equals the noisy pretrained baseline") {
  Env& e = env();
  const std::vector<std::string> conds = {"noise@0"};
  const std::string csv = run_dir(e.cfg) + "/sweep.csv";
  const std::string svg = run_dir(e.cfg) + "/sweep.svg";
  const SweepResult sw =
      sweep_interpolation(e.cfg, e.joint.checkpoint, e.paths.manifest_test_seen,
                          e.paths.trials_seen, conds, {0.0, 0.5, 1.0}, csv, svg);
  REQUIRE(sw.weights == std::vector<double>{0.0, 0.5, 1.0});
  REQUIRE(sw.conditions == conds);
  REQUIRE(sw.eer.size() == 3);
  REQUIRE(sw.fusion_eer.size() == 1);

  // w = 0 is the plain noisy signal through the pretrained encoder.
  const auto base = evaluate_pretrained_baseline(e.cfg, e.paths.manifest_test_seen,
                                                 e.paths.trials_seen, conds);
  CHECK(sw.eer[0][0] == doctest::Approx(base[0].eer).epsilon(1e-12));

  const std::string text = slurp(csv);
  CHECK(text.find("weight,condition,snr_db,eer") == 0);
  CHECK(text.find("fusion") != std::string::npos);

  // The SVG is deterministic and self-contained.
  const std::string svg1 = slurp(svg);
  CHECK(svg1.find("<svg") != std::string::npos);
  sweep_interpolation(e.cfg, e.joint.checkpoint, e.paths.manifest_test_seen,
                      e.paths.trials_seen, conds, {0.0, 0.5, 1.0}, csv, svg);
  CHECK(slurp(svg) == svg1);
}

TEST_CASE("ablation arms: naming and config deltas") {
  Env& e = env();
  const auto arms = ablation_arms();
  CHECK(arms == std::vector<std::string>{"all", "no_noisy", "no_specsub",
                                         "no_masknet", "fixed", "scratch",
                                         "finetune"});

  const ExperimentConfig all = apply_arm(e.cfg, "all");
  CHECK(all.encoder_mode == EncoderMode::kEma);
  CHECK(all.fusion_in_channels() == 3);
  CHECK(all.run_id == "base_all");

  const ExperimentConfig nn = apply_arm(e.cfg, "no_noisy");
  CHECK_FALSE(nn.use_noisy_channel);
  CHECK(nn.fusion_in_channels() == 2);

  const ExperimentConfig ns = apply_arm(e.cfg, "no_specsub");
  CHECK(ns.enabled_enhancers == std::vector<std::string>{"masknet"});

  CHECK(apply_arm(e.cfg, "fixed").encoder_mode == EncoderMode::kFixed);
  CHECK(apply_arm(e.cfg, "scratch").encoder_mode == EncoderMode::kScratch);
  CHECK(apply_arm(e.cfg, "finetune").encoder_mode == EncoderMode::kFinetune);
  CHECK_THROWS_AS(apply_arm(e.cfg, "bogus"), Error);
}

TEST_CASE("checkpoint from a different config is refused") {
  Env& e = env();
  ExperimentConfig other = with_run(e.cfg, "base");  // same run dir
  other.lr = 5e-4;
  CHECK_THROWS_AS(train_joint(other, 1), Error);
}

TEST_CASE("embeddings: clean vs corrupted, determinism") {
  Env& e = env();
  JointModel model = JointModel::load(e.joint.checkpoint, e.cfg);
  const Manifest m = load_manifest(e.paths.manifest_test_seen);
  const Waveform w = load_wav(m.dir + "/" + m.entries[0].rel_path);

  const NoiseCondition clean = NoiseCondition::parse("clean", Pool::kTest);
  const NoiseCondition noisy = NoiseCondition::parse("babble@-5", Pool::kTest);
  const auto a = model.embed(w, m.entries[0].utt_id, clean);
  const auto b = model.embed(w, m.entries[0].utt_id, clean);
  const auto c = model.embed(w, m.entries[0].utt_id, noisy);
  CHECK(a.size() == size_t(e.cfg.emb_dim));
  CHECK(a == b);
  CHECK(a != c);
  // Same utterance under the same condition draws the same noise clip.
  CHECK(model.embed(w, m.entries[0].utt_id, noisy) == c);
  // A different utterance id draws a different clip.
  CHECK(model.embed(w, m.entries[1].utt_id, noisy) != c);
}
