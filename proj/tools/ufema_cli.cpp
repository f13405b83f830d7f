// tools/ufema_cli.cpp - command-line front end over the C API only.

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

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ufema/ufema.h"

namespace {

// Machine-parsable failure line on stderr, nonzero exit.
int fail(ufema_status st) {
  std::fprintf(stderr, "error: status=%d message=%s\n", static_cast<int>(st),
               ufema_last_error());
  return 1;
}

struct ConfigHandle {
  ufema_config* cfg = nullptr;
  ~ConfigHandle() { ufema_config_free(cfg); }
};

int load_config(const std::string& path,
                const std::vector<std::string>& overrides, ConfigHandle* h) {
  ufema_status st = path.empty() ? ufema_config_create(&h->cfg)
                                 : ufema_config_load(path.c_str(), &h->cfg);
  if (st != UFEMA_OK) return fail(st);
  for (const auto& kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: status=%d message=--set expects key=value, got %s\n",
                   UFEMA_ERR_INVALID_ARGUMENT, kv.c_str());
      return 1;
    }
    st = ufema_config_set(h->cfg, kv.substr(0, eq).c_str(),
                          kv.substr(eq + 1).c_str());
    if (st != UFEMA_OK) return fail(st);
  }
  return 0;
}

// "start:end:step" -> comma list (end inclusive up to rounding); comma lists
// pass through untouched.
std::string expand_weights(const std::string& s) {
  double a = 0, b = 0, step = 0;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0)
    return s;
  std::string out;
  char buf[64];
  for (double w = a; w <= b + 1e-9; w += step) {
    std::snprintf(buf, sizeof(buf), "%.10g", w < b ? w : b);
    if (!out.empty()) out += ",";
    out += buf;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ufema: robust speaker verification with fused enhancer ensembles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ufema_version()));

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "experiment config file");
  app.add_option("--set", overrides, "override a config key (key=value)");

  auto* synth = app.add_subcommand("synth-corpus", "synthesize the speaker corpus");
  auto* enh = app.add_subcommand("train-enhancer", "build and train the enhancers");
  auto* pre = app.add_subcommand("pretrain-encoder",
                                 "pretrain the speaker encoder on clean speech");

  auto* train = app.add_subcommand("train", "joint fusion training");
  std::string arm;
  int64_t max_steps = -1;
  train->add_option("--ablate,--arm", arm, "ablation arm name (default: full system)");
  train->add_option("--max-steps", max_steps,
                    "stop after this many further steps (resumable)");

  auto* eval = app.add_subcommand("evaluate", "EER under noise conditions");
  std::string ckpt, manifest, trials, conditions = "clean", out_csv, out_svg;
  eval->add_option("--ckpt,--checkpoint", ckpt)->required();
  eval->add_option("--manifest", manifest)->required();
  eval->add_option("--trials", trials)->required();
  eval->add_option("--conditions", conditions, "comma list, e.g. clean,babble@-5");
  eval->add_option("-o,--output", out_csv, "results CSV")->required();

  auto* sweep = app.add_subcommand("sweep-interp",
                                   "fixed-weight interpolation baseline");
  std::string weights = "0:1:0.1";
  sweep->add_option("--ckpt,--checkpoint", ckpt)->required();
  sweep->add_option("--manifest", manifest)->required();
  sweep->add_option("--trials", trials)->required();
  sweep->add_option("--conditions", conditions, "comma list of conditions");
  sweep->add_option("--weights", weights,
                    "start:end:step range or comma list of weights in [0,1]");
  sweep->add_option("-o,--output", out_csv, "sweep CSV")->required();
  sweep->add_option("--svg", out_svg, "optional SVG plot");

  auto* ablate = app.add_subcommand("ablate", "train and score ablation arms");
  std::string arms;
  ablate->add_option("--arms", arms, "comma list (default: all arms)");
  ablate->add_option("--manifest", manifest)->required();
  ablate->add_option("--trials", trials)->required();
  ablate->add_option("--conditions", conditions, "comma list of conditions");
  ablate->add_option("-o,--output", out_csv, "ablation CSV")->required();

  CLI11_PARSE(app, argc, argv);

  ConfigHandle h;
  if (int rc = load_config(config_path, overrides, &h)) return rc;

  ufema_status st = UFEMA_OK;
  if (synth->parsed()) {
    st = ufema_synth_corpus(h.cfg);
  } else if (enh->parsed()) {
    st = ufema_train_enhancers(h.cfg);
  } else if (pre->parsed()) {
    st = ufema_pretrain_encoder(h.cfg);
  } else if (train->parsed()) {
    char out[1024];
    st = ufema_train(h.cfg, arm.c_str(), max_steps, out, sizeof(out));
    if (st == UFEMA_OK) std::printf("checkpoint %s\n", out);
  } else if (eval->parsed()) {
    st = ufema_evaluate(h.cfg, ckpt.c_str(), manifest.c_str(), trials.c_str(),
                        conditions.c_str(), out_csv.c_str());
  } else if (sweep->parsed()) {
    const std::string ws = expand_weights(weights);
    st = ufema_sweep_interp(h.cfg, ckpt.c_str(), manifest.c_str(), trials.c_str(),
                            conditions.c_str(), ws.c_str(), out_csv.c_str(),
                            out_svg.empty() ? nullptr : out_svg.c_str());
  } else if (ablate->parsed()) {
    if (arms.empty()) {
      char buf[512];
      st = ufema_ablation_arms(buf, sizeof(buf));
      if (st != UFEMA_OK) return fail(st);
      arms = buf;
    }
    st = ufema_ablate(h.cfg, arms.c_str(), manifest.c_str(), trials.c_str(),
                      conditions.c_str(), out_csv.c_str());
  }
  return st == UFEMA_OK ? 0 : fail(st);
}
