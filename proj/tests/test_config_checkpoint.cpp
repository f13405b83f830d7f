// tests/test_config_checkpoint.cpp - config parsing/validation and the
// checkpoint container: byte-exact round trips and corruption detection.

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
#include <zlib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "doctest.h"

using namespace ufema;

namespace {

std::string temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("ufema_cfg_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty config text yields the documented defaults") {
  const ExperimentConfig c = ExperimentConfig::from_string("");
  CHECK(c.ema_alpha == 0.999);
  CHECK(c.lr == 1e-3);
  CHECK(c.n_mels == 80);
  CHECK(c.emb_dim == 192);
  CHECK(c.aam_margin == 0.2);
  CHECK(c.aam_scale == 30.0);
  CHECK(c.batch_size == 32);
  CHECK(c.epochs == 5);
  CHECK(c.encoder_mode == EncoderMode::kEma);
  CHECK(c.use_noisy_channel);
  CHECK(c.enabled_enhancers == std::vector<std::string>{"specsub", "masknet"});
  CHECK(c.fusion_in_channels() == 3);
  CHECK(c.train_snrs == std::vector<double>{-5, 0, 5, 10});
}

TEST_CASE("config parsing: comments, overrides, lists, enums") {
  const ExperimentConfig c = ExperimentConfig::from_string(
      "# experiment\n"
      "ema_alpha = 0.99\n"
      "unet_channels = 16,32\n"
      "train_snrs = -5,0\n"
      "encoder_mode = fixed\n"
      "enabled_enhancers = specsub\n"
      "use_noisy_channel = false\n"
      "\n"
      "run_id = exp7\n");
  CHECK(c.ema_alpha == 0.99);
  CHECK(c.unet_channels == std::vector<int>{16, 32});
  CHECK(c.train_snrs == std::vector<double>{-5, 0});
  CHECK(c.encoder_mode == EncoderMode::kFixed);
  CHECK(c.enabled_enhancers == std::vector<std::string>{"specsub"});
  CHECK_FALSE(c.use_noisy_channel);
  CHECK(c.fusion_in_channels() == 1);
  CHECK(c.run_id == "exp7");
}

TEST_CASE("unknown or misspelled keys are hard errors") {
  CHECK_THROWS_AS(ExperimentConfig::from_string("emaa_alpha = 0.9\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_string("no_such_key = 1\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_string("ema_alpha\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_string("ema_alpha = not_a_number\n"), Error);
}

TEST_CASE("validation rejects out-of-range values") {
  CHECK_THROWS_AS(ExperimentConfig::from_string("ema_alpha = 1.0\n").validate(), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_string("ema_alpha = -0.1\n").validate(), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_string("batch_size = 1\n").validate(), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_string("clean_fraction = 1.5\n").validate(),
                  Error);
  CHECK_THROWS_AS(ExperimentConfig::from_string("encoder_mode = frozen\n"), Error);
  CHECK_THROWS_AS(
      ExperimentConfig::from_string("enabled_enhancers = none\nuse_noisy_channel = false\n")
          .validate(),
      Error);
  // No enhancers but a noisy channel is a legal 1-channel setup.
  ExperimentConfig::from_string("enabled_enhancers = none\n").validate();
}

TEST_CASE("to_string/from_string round trip preserves every field") {
  ExperimentConfig c = ExperimentConfig::from_string(
      "ema_alpha = 0.97\nseed = 9\nrun_id = rt\nunet_channels = 8,16\n"
      "aam_margin = 0.15\nenc_dilations = 1,2\ntrain_snrs = -5,5\n"
      "eval_copy = model\nencoder_mode = scratch\n");
  const std::string text = c.to_string();
  const ExperimentConfig d = ExperimentConfig::from_string(text);
  CHECK(d.to_string() == text);
  CHECK(d.config_hash() == c.config_hash());
  CHECK(d.ema_alpha == c.ema_alpha);
  CHECK(d.unet_channels == c.unet_channels);
  CHECK(d.eval_copy == EvalCopy::kModel);
  // Any field change moves the hash.
  c.seed = 10;
  CHECK(c.config_hash() != d.config_hash());
}

TEST_CASE("config file I/O and environment defaults") {
  const std::string dir = temp_dir("env");
  {
    std::ofstream f(dir + "/exp.cfg");
    f << "run_id = filetest\nlr = 0.002\n";
  }
  const ExperimentConfig c = ExperimentConfig::from_file(dir + "/exp.cfg");
  CHECK(c.run_id == "filetest");
  CHECK(c.lr == 0.002);
  CHECK_THROWS_AS(ExperimentConfig::from_file(dir + "/missing.cfg"), Error);

  setenv("UFEMA_DATA_DIR", "/tmp/ufema_env_data", 1);
  setenv("UFEMA_RUNS_DIR", "/tmp/ufema_env_runs", 1);
  const ExperimentConfig e = ExperimentConfig::from_string("");
  CHECK(e.data_dir == "/tmp/ufema_env_data");
  CHECK(e.runs_dir == "/tmp/ufema_env_runs");
  // Explicit keys beat the environment.
  const ExperimentConfig e2 = ExperimentConfig::from_string("data_dir = /tmp/xyz\n");
  CHECK(e2.data_dir == "/tmp/xyz");
  unsetenv("UFEMA_DATA_DIR");
  unsetenv("UFEMA_RUNS_DIR");
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint save -> load -> save is byte identical") {
  const std::string dir = temp_dir("ckpt");
  CheckpointFile ck;
  ck.set_meta("kind", "test");
  ck.set_meta("step", "42");
  ck.set_meta("alpha", "0.999");
  Rng rng(8);
  std::vector<float> a(513), b(7);
  for (auto& v : a) v = static_cast<float>(rng.normal());
  for (auto& v : b) v = static_cast<float>(rng.normal());
  ck.add_tensor("weights", a);
  ck.add_tensor("bias", b);
  ck.save(dir + "/a.ck");

  const CheckpointFile r = CheckpointFile::load(dir + "/a.ck");
  CHECK(r.meta("kind") == "test");
  CHECK(r.meta_int("step") == 42);
  CHECK(r.meta_double("alpha") == 0.999);
  CHECK(r.tensor("weights") == a);
  CHECK(r.tensor("bias") == b);
  CHECK(r.has_tensor("weights"));
  CHECK_FALSE(r.has_tensor("nope"));
  CHECK_THROWS_AS(r.tensor("nope"), Error);
  CHECK_THROWS_AS(r.meta("nope"), Error);

  r.save(dir + "/b.ck");
  CHECK(slurp(dir + "/a.ck") == slurp(dir + "/b.ck"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint corruption and format errors are detected") {
  const std::string dir = temp_dir("corrupt");
  CheckpointFile ck;
  ck.set_meta("kind", "test");
  std::vector<float> a(64, 1.5f);
  ck.add_tensor("t", a);
  ck.save(dir + "/good.ck");
  const std::string bytes = slurp(dir + "/good.ck");

  // Truncation -> corruption.
  {
    std::ofstream f(dir + "/trunc.ck", std::ios::binary);
    f.write(bytes.data(), std::streamsize(bytes.size() - 8));
  }
  CHECK_THROWS_WITH_AS(CheckpointFile::load(dir + "/trunc.ck"),
                       doctest::Contains("checksum"), Error);

  // Payload bit flip -> corruption.
  {
    std::string flipped = bytes;
    flipped[bytes.size() - 30] ^= 0x40;
    std::ofstream f(dir + "/flip.ck", std::ios::binary);
    f.write(flipped.data(), std::streamsize(flipped.size()));
  }
  CHECK_THROWS_AS(CheckpointFile::load(dir + "/flip.ck"), Error);

  // Wrong magic with a re-stamped checksum -> format error, not corruption.
  {
    std::string wrong = bytes.substr(0, bytes.size() - 4);
    wrong[0] = 'X';
    const uint32_t crc = crc32(0L, reinterpret_cast<const Bytef*>(wrong.data()),
                               static_cast<uInt>(wrong.size()));
    for (int i = 0; i < 4; ++i)
      wrong.push_back(static_cast<char>((crc >> (8 * i)) & 0xff));
    std::ofstream f(dir + "/magic.ck", std::ios::binary);
    f.write(wrong.data(), std::streamsize(wrong.size()));
  }
  try {
    CheckpointFile::load(dir + "/magic.ck");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFormatError);
  }

  CHECK_THROWS_AS(CheckpointFile::load(dir + "/absent.ck"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("re-adding a tensor or meta overwrites in place") {
  CheckpointFile ck;
  ck.add_tensor("t", {1.f});
  ck.add_tensor("t", {2.f, 3.f});
  CHECK(ck.tensor("t") == std::vector<float>{2.f, 3.f});
  ck.set_meta("k", "a");
  ck.set_meta("k", "b");
  CHECK(ck.meta("k") == "b");
  CHECK_THROWS_AS(ck.add_tensor("bad name", {1.f}), Error);
  CHECK_THROWS_AS(ck.set_meta("k", "two\nlines"), Error);
}
