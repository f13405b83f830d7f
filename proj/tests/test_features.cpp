// tests/test_features.cpp - channel stacking, mean normalization, and the
// pad/fuse/crop contract of the fusion network.

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
#include <cmath>
#include <vector>

#include "core/fusion.hpp"
#include "doctest.h"

using namespace ufema;

namespace {

MelFeature random_feature(int t, int f, uint64_t seed) {
  MelFeature m;
  m.t = t;
  m.f = f;
  m.values.resize(size_t(t) * f);
  Rng rng(seed);
  for (auto& v : m.values) v = static_cast<float>(rng.normal());
  return m;
}

}  // namespace

TEST_CASE("stack_channels keeps the noisy feature in channel 0, bit-exact") {
  const MelFeature noisy = random_feature(50, 40, 1);
  const MelFeature e1 = random_feature(50, 40, 2);
  const MelFeature e2 = random_feature(50, 40, 3);
  const MultiChannelFeature z = stack_channels(noisy, {e1, e2});
  CHECK(z.n_channels() == 3);
  CHECK(z.t() == 50);
  CHECK(z.f() == 40);
  CHECK(z.channels[0].values == noisy.values);
  CHECK(z.channels[1].values == e1.values);
  CHECK(z.channels[2].values == e2.values);
  // Swapping the enhanced order permutes channels 1..N accordingly.
  const MultiChannelFeature zr = stack_channels(noisy, {e2, e1});
  CHECK(zr.channels[1].values == e2.values);
  CHECK(zr.channels[2].values == e1.values);
}

TEST_CASE("stack_channels rejects shape mismatches and empty stacks") {
  const MelFeature noisy = random_feature(50, 40, 1);
  CHECK_THROWS_AS(stack_channels(noisy, {}), Error);
  CHECK_THROWS_AS(stack_channels(noisy, {random_feature(49, 40, 2)}), Error);
  CHECK_THROWS_AS(stack_channels(noisy, {random_feature(50, 41, 2)}), Error);
}

TEST_CASE("mean_normalize zeroes each bin's time mean and is idempotent") {
  const MelFeature m = random_feature(64, 20, 7);
  const MelFeature n = mean_normalize(m);
  REQUIRE(n.t == m.t);
  REQUIRE(n.f == m.f);
  for (int f = 0; f < n.f; ++f) {
    double mean = 0.0;
    for (int t = 0; t < n.t; ++t) mean += n.at(t, f);
    CHECK(std::abs(mean / n.t) < 1e-5);
  }
  // Differences within a bin are preserved.
  CHECK(n.at(3, 5) - n.at(9, 5) == doctest::Approx(m.at(3, 5) - m.at(9, 5)).epsilon(1e-5));
  const MelFeature n2 = mean_normalize(n);
  for (size_t i = 0; i < n.values.size(); ++i)
    CHECK(std::abs(n2.values[i] - n.values[i]) < 1e-5);
}

TEST_CASE("to_tensor packs [1, C, T, F] in channel-major order") {
  const MelFeature noisy = random_feature(10, 8, 4);
  const MelFeature enh = random_feature(10, 8, 5);
  const MultiChannelFeature z = stack_channels(noisy, {enh});
  const nn::Tensor<float> x = to_tensor(z);
  REQUIRE(x.shape == std::vector<int>{1, 2, 10, 8});
  for (int t = 0; t < 10; ++t)
    for (int f = 0; f < 8; ++f) {
      CHECK(x.v[size_t(t) * 8 + f] == noisy.at(t, f));
      CHECK(x.v[size_t(10) * 8 + size_t(t) * 8 + f] == enh.at(t, f));
    }
}

TEST_CASE("fuse restores the exact T x F shape for arbitrary sizes") {
  UNetConfig cfg;
  cfg.in_channels = 3;
  cfg.encoder_channels = {8, 16};
  UNet<float> net(cfg);
  net.init(11);

  Rng rng(99);
  for (int rep = 0; rep < 12; ++rep) {
    const int t = 16 + int(rng.uniform_int(200));
    const int f = rng.uniform_int(2) ? 40 : 80;
    const MelFeature noisy = random_feature(t, f, rng.raw());
    const MultiChannelFeature z =
        stack_channels(noisy, {random_feature(t, f, rng.raw()),
                               random_feature(t, f, rng.raw())});
    const MelFeature fused = fuse(&net, z);
    CHECK(fused.t == t);
    CHECK(fused.f == f);
    CHECK(int(fused.values.size()) == t * f);
    for (float v : fused.values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("fuse on the standard 2 s geometry") {
  UNetConfig cfg;
  cfg.in_channels = 3;
  cfg.encoder_channels = {8, 16};
  UNet<float> net(cfg);
  net.init(1);
  const MelFeature noisy = random_feature(198, 80, 21);
  const MultiChannelFeature z =
      stack_channels(noisy, {random_feature(198, 80, 22), random_feature(198, 80, 23)});
  const MelFeature fused = fuse(&net, z);
  CHECK(fused.t == 198);
  CHECK(fused.f == 80);
}

TEST_CASE("freshly initialized fusion starts near the channel mean") {
  // The head is initialized to average the raw input channels, so before any
  // training the fused output should track the per-cell channel mean.
  UNetConfig cfg;
  cfg.in_channels = 3;
  cfg.encoder_channels = {8, 16};
  UNet<float> net(cfg);
  net.init(5);

  const int t = 64, f = 48;
  const MelFeature a = random_feature(t, f, 31);
  const MelFeature b = random_feature(t, f, 32);
  const MelFeature c = random_feature(t, f, 33);
  const MultiChannelFeature z = stack_channels(a, {b, c});
  const MelFeature fused = fuse(&net, z);

  double err = 0.0, ref = 0.0;
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < f; ++j) {
      const double mean = (a.at(i, j) + b.at(i, j) + c.at(i, j)) / 3.0;
      err += (fused.at(i, j) - mean) * (fused.at(i, j) - mean);
      ref += mean * mean;
    }
  CHECK(std::sqrt(err / (t * f)) <= 0.5 * std::max(1.0, std::sqrt(ref / (t * f))));
}

TEST_CASE("fusion output is a deterministic function of the init seed") {
  UNetConfig cfg;
  cfg.in_channels = 2;
  cfg.encoder_channels = {8, 16};
  const MelFeature noisy = random_feature(40, 32, 61);
  const MultiChannelFeature z = stack_channels(noisy, {random_feature(40, 32, 62)});

  UNet<float> n1(cfg), n2(cfg), n3(cfg);
  n1.init(9);
  n2.init(9);
  n3.init(10);
  CHECK(fuse(&n1, z).values == fuse(&n2, z).values);
  CHECK(fuse(&n1, z).values != fuse(&n3, z).values);
}

TEST_CASE("channel-count mismatches are rejected at the network boundary") {
  UNetConfig cfg;
  cfg.in_channels = 3;
  cfg.encoder_channels = {8, 16};
  UNet<float> net(cfg);
  net.init(2);
  const MelFeature noisy = random_feature(32, 32, 71);
  const MultiChannelFeature z = stack_channels(noisy, {random_feature(32, 32, 72)});
  CHECK_THROWS_AS(fuse(&net, z), Error);  // 2 channels into a 3-channel net
}
