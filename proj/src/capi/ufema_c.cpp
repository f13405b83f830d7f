// capi/ufema_c.cpp - C ABI wrapper over the C++ core.

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

#include "ufema/ufema.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "core/config.hpp"
#include "core/corpus.hpp"
#include "core/evaluation.hpp"
#include "core/training.hpp"

namespace {

thread_local std::string g_last_error;

ufema_status map_code(ufema::ErrorCode c) {
  using EC = ufema::ErrorCode;
  switch (c) {
    case EC::kInvalidArgument: return UFEMA_ERR_INVALID_ARGUMENT;
    case EC::kDegenerateInput: return UFEMA_ERR_DEGENERATE_INPUT;
    case EC::kIoError: return UFEMA_ERR_IO;
    case EC::kFormatError: return UFEMA_ERR_FORMAT;
    case EC::kTrainingFailure: return UFEMA_ERR_TRAINING;
    case EC::kCorruption: return UFEMA_ERR_CORRUPTION;
    case EC::kPoolViolation: return UFEMA_ERR_POOL;
  }
  return UFEMA_ERR_INTERNAL;
}

template <class Fn>
ufema_status guarded(Fn&& fn) {
  try {
    fn();
    return UFEMA_OK;
  } catch (const ufema::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UFEMA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return UFEMA_ERR_INTERNAL;
  }
}

ufema_status fail_arg(const char* msg) {
  g_last_error = msg;
  return UFEMA_ERR_INVALID_ARGUMENT;
}

ufema_status copy_out(const std::string& s, char* out, size_t cap) {
  if (!out) return UFEMA_OK;
  if (s.size() + 1 > cap) return fail_arg("output buffer too small");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return UFEMA_OK;
}

std::vector<std::string> split_csv(const char* s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) out.push_back(item);
  return out;
}

const ufema::ExperimentConfig& cpp(const ufema_config* c) {
  return *reinterpret_cast<const ufema::ExperimentConfig*>(c);
}
ufema::ExperimentConfig& cpp(ufema_config* c) {
  return *reinterpret_cast<ufema::ExperimentConfig*>(c);
}

}  // namespace

extern "C" {

const char* ufema_version(void) { return "1.0.0"; }

const char* ufema_last_error(void) { return g_last_error.c_str(); }

ufema_status ufema_config_create(ufema_config** out) {
  if (!out) return fail_arg("out is NULL");
  return guarded([&] {
    *out = reinterpret_cast<ufema_config*>(new ufema::ExperimentConfig());
  });
}

ufema_status ufema_config_load(const char* path, ufema_config** out) {
  if (!path || !out) return fail_arg("path/out is NULL");
  return guarded([&] {
    *out = reinterpret_cast<ufema_config*>(
        new ufema::ExperimentConfig(ufema::ExperimentConfig::from_file(path)));
  });
}

ufema_status ufema_config_set(ufema_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail_arg("cfg/key/value is NULL");
  return guarded([&] { cpp(cfg).set_key(key, value); });
}

ufema_status ufema_config_get(const ufema_config* cfg, const char* key,
                              char* value_out, size_t value_cap) {
  if (!cfg || !key || !value_out) return fail_arg("cfg/key/value_out is NULL");
  ufema_status st = UFEMA_OK;
  ufema_status run = guarded([&] {
    const std::string text = cpp(cfg).to_string();
    const std::string prefix = std::string(key) + " = ";
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line))
      if (line.rfind(prefix, 0) == 0) {
        st = copy_out(line.substr(prefix.size()), value_out, value_cap);
        return;
      }
    throw ufema::Error(ufema::ErrorCode::kInvalidArgument,
                       std::string("unknown config key `") + key + "`");
  });
  return run != UFEMA_OK ? run : st;
}

ufema_status ufema_config_save(const ufema_config* cfg, const char* path) {
  if (!cfg || !path) return fail_arg("cfg/path is NULL");
  return guarded([&] {
    std::ofstream f(path, std::ios::trunc);
    ufema::require(f.good(), ufema::ErrorCode::kIoError,
                   std::string("cannot write config: ") + path);
    f << cpp(cfg).to_string();
  });
}

void ufema_config_free(ufema_config* cfg) {
  delete reinterpret_cast<ufema::ExperimentConfig*>(cfg);
}

ufema_status ufema_synth_corpus(const ufema_config* cfg) {
  if (!cfg) return fail_arg("cfg is NULL");
  return guarded([&] {
    ufema::build_corpus(cpp(cfg).corpus_spec(), ufema::corpus_dir(cpp(cfg)));
  });
}

ufema_status ufema_train_enhancers(const ufema_config* cfg) {
  if (!cfg) return fail_arg("cfg is NULL");
  return guarded([&] { ufema::train_enhancers(cpp(cfg)); });
}

ufema_status ufema_pretrain_encoder(const ufema_config* cfg) {
  if (!cfg) return fail_arg("cfg is NULL");
  return guarded([&] { ufema::pretrain_encoder(cpp(cfg)); });
}

ufema_status ufema_train(const ufema_config* cfg, const char* arm,
                         int64_t max_steps, char* ckpt_out, size_t ckpt_cap) {
  if (!cfg) return fail_arg("cfg is NULL");
  ufema_status st = UFEMA_OK;
  ufema_status run = guarded([&] {
    ufema::ExperimentConfig c = cpp(cfg);
    if (arm && *arm) c = ufema::apply_arm(c, arm);
    const auto report = ufema::train_joint(c, max_steps);
    st = copy_out(report.checkpoint, ckpt_out, ckpt_cap);
  });
  return run != UFEMA_OK ? run : st;
}

ufema_status ufema_ablation_arms(char* arms_out, size_t arms_cap) {
  if (!arms_out) return fail_arg("arms_out is NULL");
  std::string joined;
  for (const auto& a : ufema::ablation_arms()) {
    if (!joined.empty()) joined += ",";
    joined += a;
  }
  return copy_out(joined, arms_out, arms_cap);
}

ufema_status ufema_evaluate(const ufema_config* cfg, const char* checkpoint,
                            const char* manifest, const char* trials,
                            const char* conditions, const char* out_csv) {
  if (!cfg || !checkpoint || !manifest || !trials || !conditions || !out_csv)
    return fail_arg("required argument is NULL");
  return guarded([&] {
    ufema::evaluate_conditions(cpp(cfg), checkpoint, manifest, trials,
                               split_csv(conditions), out_csv);
  });
}

ufema_status ufema_sweep_interp(const ufema_config* cfg, const char* checkpoint,
                                const char* manifest, const char* trials,
                                const char* conditions, const char* weights,
                                const char* out_csv, const char* out_svg) {
  if (!cfg || !checkpoint || !manifest || !trials || !conditions || !weights ||
      !out_csv)
    return fail_arg("required argument is NULL");
  return guarded([&] {
    std::vector<double> ws;
    for (const auto& s : split_csv(weights)) ws.push_back(std::stod(s));
    ufema::sweep_interpolation(cpp(cfg), checkpoint, manifest, trials,
                               split_csv(conditions), ws, out_csv,
                               out_svg ? out_svg : "");
  });
}

ufema_status ufema_ablate(const ufema_config* cfg, const char* arms,
                          const char* manifest, const char* trials,
                          const char* conditions, const char* out_csv) {
  if (!cfg || !arms || !manifest || !trials || !conditions || !out_csv)
    return fail_arg("required argument is NULL");
  return guarded([&] {
    ufema::run_ablation_matrix(cpp(cfg), split_csv(arms), manifest, trials,
                               split_csv(conditions), out_csv);
  });
}

ufema_status ufema_compute_eer(const double* scores, const int32_t* labels,
                               size_t n, double* eer_out) {
  if (!scores || !labels || !eer_out) return fail_arg("scores/labels/eer_out is NULL");
  return guarded([&] {
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      ufema::require_arg(labels[i] == 0 || labels[i] == 1,
                         "labels must be 0 or 1");
      scored.push_back({scores[i], labels[i] == 1});
    }
    *eer_out = ufema::compute_eer(scored);
  });
}

}  // extern "C"
