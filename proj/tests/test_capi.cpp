// tests/test_capi.cpp - the C interface: config lifecycle, error reporting,
// and the standalone EER entry point. Links the shared library only.

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
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "ufema/ufema.h"

namespace {

struct Cfg {
  ufema_config* c = nullptr;
  ~Cfg() { ufema_config_free(c); }
};

std::string get(const ufema_config* c, const char* key) {
  char buf[256];
  REQUIRE(ufema_config_get(c, key, buf, sizeof(buf)) == UFEMA_OK);
  return buf;
}

}  // namespace

TEST_CASE("version string is present") {
  REQUIRE(ufema_version() != nullptr);
  CHECK(std::strlen(ufema_version()) > 0);
}

TEST_CASE("config create/set/get round trip") {
  Cfg h;
  REQUIRE(ufema_config_create(&h.c) == UFEMA_OK);
  CHECK(get(h.c, "ema_alpha") == "0.999");
  CHECK(get(h.c, "n_mels") == "80");

  REQUIRE(ufema_config_set(h.c, "ema_alpha", "0.99") == UFEMA_OK);
  CHECK(get(h.c, "ema_alpha") == "0.99");
  REQUIRE(ufema_config_set(h.c, "run_id", "capi") == UFEMA_OK);
  CHECK(get(h.c, "run_id") == "capi");

  // Unknown keys report invalid-argument with a message.
  CHECK(ufema_config_set(h.c, "emaa_alpha", "0.9") == UFEMA_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(ufema_last_error()) > 0);
  char buf[8];
  CHECK(ufema_config_get(h.c, "no_such_key", buf, sizeof(buf)) ==
        UFEMA_ERR_INVALID_ARGUMENT);

  // Null handles are rejected, not crashed on.
  CHECK(ufema_config_set(nullptr, "seed", "1") == UFEMA_ERR_INVALID_ARGUMENT);
  CHECK(ufema_config_create(nullptr) == UFEMA_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config save/load through the C surface") {
  const auto dir = std::filesystem::temp_directory_path() / "ufema_capi";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "c.cfg").string();

  Cfg a;
  REQUIRE(ufema_config_create(&a.c) == UFEMA_OK);
  REQUIRE(ufema_config_set(a.c, "seed", "77") == UFEMA_OK);
  REQUIRE(ufema_config_save(a.c, path.c_str()) == UFEMA_OK);

  Cfg b;
  REQUIRE(ufema_config_load(path.c_str(), &b.c) == UFEMA_OK);
  CHECK(get(b.c, "seed") == "77");

  Cfg c;
  CHECK(ufema_config_load((dir / "nope.cfg").string().c_str(), &c.c) == UFEMA_ERR_IO);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ufema_compute_eer matches hand-checked values") {
  {
    const double scores[] = {0.9, 0.8, 0.3, 0.7, 0.4, 0.2};
    const int32_t labels[] = {1, 1, 1, 0, 0, 0};
    double eer = -1.0;
    REQUIRE(ufema_compute_eer(scores, labels, 6, &eer) == UFEMA_OK);
    CHECK(eer == doctest::Approx(1.0 / 3.0));
  }
  {
    const double scores[] = {1.0, 0.9, 0.1, 0.0};
    const int32_t labels[] = {1, 1, 0, 0};
    double eer = -1.0;
    REQUIRE(ufema_compute_eer(scores, labels, 4, &eer) == UFEMA_OK);
    CHECK(eer == doctest::Approx(0.0));
  }
  // Single-class input is degenerate.
  const double s1[] = {0.5};
  const int32_t l1[] = {1};
  double eer = 0.0;
  CHECK(ufema_compute_eer(s1, l1, 1, &eer) != UFEMA_OK);
  CHECK(ufema_compute_eer(nullptr, l1, 1, &eer) == UFEMA_ERR_INVALID_ARGUMENT);
}

TEST_CASE("ablation arms are enumerable") {
  char buf[512];
  REQUIRE(ufema_ablation_arms(buf, sizeof(buf)) == UFEMA_OK);
  const std::string arms = buf;
  CHECK(arms.find("all") != std::string::npos);
  CHECK(arms.find("fixed") != std::string::npos);
  CHECK(arms.find("scratch") != std::string::npos);
  CHECK(arms.find("finetune") != std::string::npos);
  CHECK(arms.find("no_noisy") != std::string::npos);
  // Too-small buffers fail loudly instead of truncating.
  char tiny[3];
  CHECK(ufema_ablation_arms(tiny, sizeof(tiny)) == UFEMA_ERR_INVALID_ARGUMENT);
}
