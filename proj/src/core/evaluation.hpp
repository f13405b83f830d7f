// core/evaluation.hpp

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

#ifndef UFEMA_CORE_EVALUATION_HPP_
#define UFEMA_CORE_EVALUATION_HPP_

#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace ufema {

struct Trial {
  bool target = false;
  std::string utt_a, utt_b;
};

// Trial list file: `label utt_a utt_b`, label in {1, 0}.
std::vector<Trial> load_trials(const std::string& path);

double cosine_score(const std::vector<float>& a, const std::vector<float>& b);

// Equal error rate in [0, 1]: threshold sweep over sorted scores with linear
// interpolation between the FAR/FRR crossing points.
double compute_eer(const std::vector<std::pair<double, bool>>& scored);

struct ConditionResult {
  std::string condition;  // descriptor, e.g. "babble@-5"
  double snr_db = 0.0;    // ignored when is_clean
  bool is_clean = false;
  double eer = 0.0;
  int n_target = 0;
  int n_nontarget = 0;
};

// Results CSV: header `condition,snr_db,eer,n_target,n_nontarget`; clean rows
// leave snr_db empty.
void write_results_csv(const std::string& path,
                       const std::vector<ConditionResult>& rows);

}  // namespace ufema

#endif  // UFEMA_CORE_EVALUATION_HPP_
