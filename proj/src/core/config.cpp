// core/config.cpp

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

#include "core/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace ufema {

const char* encoder_mode_name(EncoderMode m) {
  switch (m) {
    case EncoderMode::kEma: return "ema";
    case EncoderMode::kFixed: return "fixed";
    case EncoderMode::kScratch: return "scratch";
    case EncoderMode::kFinetune: return "finetune";
  }
  throw Error(ErrorCode::kInvalidArgument, "bad encoder mode");
}

EncoderMode encoder_mode_from_name(const std::string& s) {
  if (s == "ema") return EncoderMode::kEma;
  if (s == "fixed") return EncoderMode::kFixed;
  if (s == "scratch") return EncoderMode::kScratch;
  if (s == "finetune") return EncoderMode::kFinetune;
  throw Error(ErrorCode::kInvalidArgument, "unknown encoder_mode: " + s);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Shortest representation that parses back to exactly x.
std::string fmt_double(double x) {
  for (int prec = 1; prec <= 17; ++prec) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    if (std::stod(os.str()) == x) return os.str();
  }
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

template <class T>
std::string join(const std::vector<T>& v,
                 std::string (*fmt)(const T&) = nullptr) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>)
      out += v[i];
    else if constexpr (std::is_same_v<T, double>)
      out += fmt_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  (void)fmt;
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    require_arg(!item.empty(), "empty element in list value: " + s);
    out.push_back(item);
  }
  return out;
}

// One entry per config key: how to print it and how to parse it back.
struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

double parse_double(const std::string& key, const std::string& v) {
  size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require_arg(used == v.size() && std::isfinite(x),
              "bad numeric value for " + key + ": " + v);
  return x;
}

int64_t parse_int(const std::string& key, const std::string& v) {
  size_t used = 0;
  int64_t x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require_arg(used == v.size(), "bad integer value for " + key + ": " + v);
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::kInvalidArgument, "bad boolean value for " + key + ": " + v);
}

#define STR_FIELD(name)                                                     \
  {#name, [](const ExperimentConfig& c) { return c.name; },                 \
   [](ExperimentConfig& c, const std::string& v) { c.name = v; }}
#define INT_FIELD(name)                                                     \
  {#name, [](const ExperimentConfig& c) { return std::to_string(c.name); }, \
   [](ExperimentConfig& c, const std::string& v) {                          \
     c.name = static_cast<int>(parse_int(#name, v));                        \
   }}
#define U64_FIELD(name)                                                     \
  {#name, [](const ExperimentConfig& c) { return std::to_string(c.name); }, \
   [](ExperimentConfig& c, const std::string& v) {                          \
     c.name = static_cast<uint64_t>(parse_int(#name, v));                   \
   }}
#define DBL_FIELD(name)                                                \
  {#name, [](const ExperimentConfig& c) { return fmt_double(c.name); }, \
   [](ExperimentConfig& c, const std::string& v) {                     \
     c.name = parse_double(#name, v);                                  \
   }}
#define BOOL_FIELD(name)                                                      \
  {#name,                                                                     \
   [](const ExperimentConfig& c) { return std::string(c.name ? "true" : "false"); }, \
   [](ExperimentConfig& c, const std::string& v) { c.name = parse_bool(#name, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      STR_FIELD(data_dir),
      STR_FIELD(runs_dir),
      STR_FIELD(run_id),
      U64_FIELD(seed),
      INT_FIELD(n_speakers),
      INT_FIELD(utts_per_speaker),
      INT_FIELD(test_utts_per_speaker),
      INT_FIELD(n_unseen_speakers),
      INT_FIELD(unseen_utts_per_speaker),
      DBL_FIELD(utt_duration_s),
      DBL_FIELD(segment_s),
      U64_FIELD(corpus_seed),
      INT_FIELD(sample_rate),
      INT_FIELD(n_mels),
      DBL_FIELD(win_ms),
      DBL_FIELD(hop_ms),
      INT_FIELD(n_fft),
      DBL_FIELD(log_eps),
      DBL_FIELD(enh_specsub_oversub),
      DBL_FIELD(enh_specsub_floor),
      INT_FIELD(enh_mask_hidden),
      INT_FIELD(enh_epochs),
      DBL_FIELD(enh_lr),
      INT_FIELD(enh_batch),
      INT_FIELD(enh_train_pairs),
      {"enh_noise_kinds",
       [](const ExperimentConfig& c) { return join(c.enh_noise_kinds); },
       [](ExperimentConfig& c, const std::string& v) {
         c.enh_noise_kinds = split_list(v);
       }},
      {"unet_channels",
       [](const ExperimentConfig& c) { return join(c.unet_channels); },
       [](ExperimentConfig& c, const std::string& v) {
         c.unet_channels.clear();
         for (const auto& s : split_list(v))
           c.unet_channels.push_back(
               static_cast<int>(parse_int("unet_channels", s)));
       }},
      BOOL_FIELD(unet_skips),
      INT_FIELD(enc_channels),
      {"enc_dilations",
       [](const ExperimentConfig& c) { return join(c.enc_dilations); },
       [](ExperimentConfig& c, const std::string& v) {
         c.enc_dilations.clear();
         for (const auto& s : split_list(v))
           c.enc_dilations.push_back(
               static_cast<int>(parse_int("enc_dilations", s)));
       }},
      INT_FIELD(enc_kernel),
      INT_FIELD(emb_dim),
      DBL_FIELD(aam_margin),
      DBL_FIELD(aam_scale),
      INT_FIELD(pretrain_epochs),
      DBL_FIELD(pretrain_lr),
      INT_FIELD(pretrain_batch),
      DBL_FIELD(lr),
      DBL_FIELD(ema_alpha),
      INT_FIELD(epochs),
      INT_FIELD(batch_size),
      DBL_FIELD(clean_fraction),
      {"train_snrs",
       [](const ExperimentConfig& c) { return join(c.train_snrs); },
       [](ExperimentConfig& c, const std::string& v) {
         c.train_snrs.clear();
         for (const auto& s : split_list(v))
           c.train_snrs.push_back(parse_double("train_snrs", s));
       }},
      INT_FIELD(noise_cache_per_kind),
      INT_FIELD(checkpoint_every),
      {"encoder_mode",
       [](const ExperimentConfig& c) {
         return std::string(encoder_mode_name(c.encoder_mode));
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.encoder_mode = encoder_mode_from_name(v);
       }},
      {"eval_copy",
       [](const ExperimentConfig& c) {
         return std::string(c.eval_copy == EvalCopy::kEma ? "ema" : "model");
       },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "ema")
           c.eval_copy = EvalCopy::kEma;
         else if (v == "model")
           c.eval_copy = EvalCopy::kModel;
         else
           throw Error(ErrorCode::kInvalidArgument, "bad eval_copy: " + v);
       }},
      BOOL_FIELD(use_noisy_channel),
      {"enabled_enhancers",
       [](const ExperimentConfig& c) { return join(c.enabled_enhancers); },
       [](ExperimentConfig& c, const std::string& v) {
         c.enabled_enhancers = v == "none" ? std::vector<std::string>{}
                                           : split_list(v);
       }},
  };
  return kFields;
}

#undef STR_FIELD
#undef INT_FIELD
#undef U64_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD

}  // namespace

std::string ExperimentConfig::default_data_dir() {
  const char* e = std::getenv("UFEMA_DATA_DIR");
  return e && *e ? e : "data";
}

std::string ExperimentConfig::default_runs_dir() {
  const char* e = std::getenv("UFEMA_RUNS_DIR");
  return e && *e ? e : "runs";
}

void ExperimentConfig::set_key(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown config key `" + key + "`");
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kInvalidArgument,
            "config line " + std::to_string(lineno) + " is not `key = value`: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require_arg(!key.empty(), "empty key at config line " + std::to_string(lineno));
    try {
      cfg.set_key(key, value);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (config line " +
                                std::to_string(lineno) + ")");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::kIoError, "cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  try {
    return from_string(text);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " in " + path);
  }
}

std::string ExperimentConfig::to_string() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  require_arg(n_speakers >= 2, "need at least 2 speakers");
  require_arg(utts_per_speaker >= 2 && test_utts_per_speaker >= 2 &&
                  n_unseen_speakers >= 2 && unseen_utts_per_speaker >= 2,
              "corpus sizes too small to form trials");
  require_arg(utt_duration_s > 0 && segment_s > 0 && segment_s <= utt_duration_s,
              "segment_s must be in (0, utt_duration_s]");
  require_arg(sample_rate > 0 && n_fft > 0 && n_mels > 0, "bad feature sizes");
  require_arg(win_ms > 0 && hop_ms > 0 && hop_ms <= win_ms, "bad frame sizes");
  require_arg(log_eps > 0, "log_eps must be positive");
  require_arg(enh_specsub_oversub >= 0 && enh_specsub_floor >= 0 &&
                  enh_specsub_floor <= 1,
              "bad spectral subtraction parameters");
  require_arg(enh_mask_hidden > 0 && enh_epochs > 0 && enh_lr > 0 &&
                  enh_batch > 0 && enh_train_pairs > 0,
              "bad mask enhancer training parameters");
  require_arg(!unet_channels.empty(), "unet_channels must be non-empty");
  for (int c : unet_channels) require_arg(c > 0, "unet_channels must be positive");
  require_arg(enc_channels > 0 && enc_kernel > 0 && enc_kernel % 2 == 1 &&
                  emb_dim > 0 && !enc_dilations.empty(),
              "bad encoder sizes");
  for (int d : enc_dilations) require_arg(d > 0, "dilations must be positive");
  aam_config().validate();
  require_arg(pretrain_epochs > 0 && pretrain_lr > 0 && pretrain_batch >= 2,
              "bad pretraining parameters");
  require_arg(lr > 0, "lr must be positive");
  require_arg(ema_alpha >= 0.0 && ema_alpha < 1.0, "ema_alpha must be in [0, 1)");
  require_arg(epochs > 0 && batch_size >= 2, "bad joint training sizes");
  require_arg(clean_fraction >= 0.0 && clean_fraction <= 1.0,
              "clean_fraction must be in [0, 1]");
  require_arg(!train_snrs.empty(), "train_snrs must be non-empty");
  require_arg(noise_cache_per_kind > 0, "noise_cache_per_kind must be positive");
  require_arg(checkpoint_every >= 0, "checkpoint_every must be non-negative");
  for (const auto& e : enabled_enhancers)
    require_arg(e == "specsub" || e == "masknet", "unknown enhancer: " + e);
  require_arg(!enh_noise_kinds.empty(), "enh_noise_kinds must be non-empty");
  for (const auto& k : enh_noise_kinds)
    require_arg(k == "noise" || k == "music" || k == "babble",
                "unknown noise kind: " + k);
  require_arg(fusion_in_channels() >= 1,
              "fusion needs at least one input channel");
}

CorpusSpec ExperimentConfig::corpus_spec() const {
  CorpusSpec s;
  s.n_speakers = n_speakers;
  s.utts_per_speaker = utts_per_speaker;
  s.test_utts_per_speaker = test_utts_per_speaker;
  s.n_unseen_speakers = n_unseen_speakers;
  s.unseen_utts_per_speaker = unseen_utts_per_speaker;
  s.utt_duration_s = utt_duration_s;
  s.seed = corpus_seed;
  s.sample_rate = sample_rate;
  return s;
}

FeatureConfig ExperimentConfig::feature_config() const {
  FeatureConfig f;
  f.n_mels = n_mels;
  f.win_ms = win_ms;
  f.hop_ms = hop_ms;
  f.n_fft = n_fft;
  f.log_eps = log_eps;
  return f;
}

UNetConfig ExperimentConfig::unet_config() const {
  UNetConfig u;
  u.in_channels = fusion_in_channels();
  u.encoder_channels = unet_channels;
  u.use_skips = unet_skips;
  return u;
}

EncoderConfig ExperimentConfig::encoder_config() const {
  EncoderConfig e;
  e.n_mels = n_mels;
  e.channels = enc_channels;
  e.dilations = enc_dilations;
  e.kernel = enc_kernel;
  e.emb_dim = emb_dim;
  return e;
}

AamConfig ExperimentConfig::aam_config() const {
  AamConfig a;
  a.margin = aam_margin;
  a.scale = aam_scale;
  return a;
}

}  // namespace ufema
