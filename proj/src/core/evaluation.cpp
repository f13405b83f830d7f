// core/evaluation.cpp

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

#include "core/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ufema {

std::vector<Trial> load_trials(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::kIoError, "cannot open trial list: " + path);
  std::vector<Trial> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string label;
    Trial t;
    if (!(is >> label >> t.utt_a >> t.utt_b) || (label != "0" && label != "1"))
      throw Error(ErrorCode::kFormatError,
                  "bad trial line " + std::to_string(lineno) + " in " + path);
    require_arg(t.utt_a != t.utt_b,
                "trial pairs an utterance with itself at line " +
                    std::to_string(lineno));
    t.target = label == "1";
    out.push_back(std::move(t));
  }
  return out;
}

double cosine_score(const std::vector<float>& a, const std::vector<float>& b) {
  require_arg(a.size() == b.size() && !a.empty(), "embedding dim mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  require_arg(na > 0.0 && nb > 0.0, "zero-norm embedding in cosine score");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double compute_eer(const std::vector<std::pair<double, bool>>& scored) {
  size_t n_target = 0, n_nontarget = 0;
  for (const auto& [s, is_target] : scored) {
    require_arg(std::isfinite(s), "non-finite trial score");
    (is_target ? n_target : n_nontarget)++;
  }
  require_arg(n_target > 0 && n_nontarget > 0,
              "EER needs at least one target and one nontarget trial");

  // Sweep the acceptance threshold down through the sorted scores; at each
  // step FAR rises and FRR falls. The EER is the crossing of the
  // piecewise-linear (FAR, FRR) path with the diagonal.
  auto sorted = scored;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  double far = 0.0, frr = 1.0;
  double prev_far = 0.0, prev_frr = 1.0;
  size_t fa = 0, fr = n_target;
  size_t i = 0;
  while (i < sorted.size()) {
    // Process all trials tied at this score together.
    const double s = sorted[i].first;
    while (i < sorted.size() && sorted[i].first == s) {
      if (sorted[i].second)
        --fr;  // target now accepted
      else
        ++fa;  // nontarget now accepted
      ++i;
    }
    prev_far = far;
    prev_frr = frr;
    far = double(fa) / n_nontarget;
    frr = double(fr) / n_target;
    if (far >= frr) {
      const double d = (far - prev_far) - (frr - prev_frr);
      double lam = d != 0.0 ? (prev_frr - prev_far) / d : 1.0;
      lam = std::clamp(lam, 0.0, 1.0);
      return prev_far + lam * (far - prev_far);
    }
  }
  return far;  // all scores exhausted without crossing (degenerate)
}

void write_results_csv(const std::string& path,
                       const std::vector<ConditionResult>& rows) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::kIoError, "cannot write results csv: " + path);
  f << "condition,snr_db,eer,n_target,n_nontarget\n";
  for (const auto& r : rows) {
    f << r.condition << ',';
    if (!r.is_clean) f << r.snr_db;
    f << ',' << r.eer << ',' << r.n_target << ',' << r.n_nontarget << '\n';
  }
}

}  // namespace ufema
