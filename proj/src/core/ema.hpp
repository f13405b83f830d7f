// core/ema.hpp

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

#ifndef UFEMA_CORE_EMA_HPP_
#define UFEMA_CORE_EMA_HPP_

#include <vector>

#include "core/common.hpp"

namespace ufema {

// Paired parameter sets: the gradient-trained copy and its smoothed shadow.
// Both start from the pretrained weights; the shadow moves by
// theta_ema <- alpha * theta_ema + (1 - alpha) * theta_model per step.
// Encoder BN running statistics ride along in the same flat vector.
struct EmaState {
  std::vector<float> theta_model;
  std::vector<float> theta_ema;
  double alpha = 0.999;
  int64_t step = 0;

  static EmaState init(const std::vector<float>& pretrained, double alpha) {
    require_arg(alpha >= 0.0 && alpha < 1.0, "EMA alpha must be in [0, 1)");
    EmaState s;
    s.theta_model = pretrained;
    s.theta_ema = pretrained;
    s.alpha = alpha;
    s.step = 0;
    return s;
  }

  // Apply one smoothing step; theta_model is read, never written.
  void update() {
    require(theta_model.size() == theta_ema.size(), ErrorCode::kCorruption,
            "EMA parameter shape mismatch");
    const float a = static_cast<float>(alpha);
    for (size_t i = 0; i < theta_ema.size(); ++i)
      theta_ema[i] = a * theta_ema[i] + (1.f - a) * theta_model[i];
    ++step;
  }

  // Immutable copy of the smoothed weights for evaluation/deployment.
  std::vector<float> ema_snapshot() const { return theta_ema; }
};

}  // namespace ufema

#endif  // UFEMA_CORE_EMA_HPP_
