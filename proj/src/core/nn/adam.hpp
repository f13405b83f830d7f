// core/nn/adam.hpp

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

#ifndef UFEMA_CORE_NN_ADAM_HPP_
#define UFEMA_CORE_NN_ADAM_HPP_

#include <cmath>
#include <vector>

#include "core/nn/tensor.hpp"

namespace ufema::nn {

// Adam over an explicit parameter list. Moment buffers are exposed flat so
// checkpoints can resume bit-exactly.
template <class T>
class Adam {
 public:
  explicit Adam(std::vector<Param<T>*> params, double lr = 1e-3,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape);
      v_.emplace_back(p->value.shape);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    for (size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k]->value.v;
      auto& g = params_[k]->grad.v;
      auto& m = m_[k].v;
      auto& v = v_[k].v;
      for (size_t i = 0; i < p.size(); ++i) {
        m[i] = static_cast<T>(b1_ * m[i] + (1.0 - b1_) * g[i]);
        v[i] = static_cast<T>(b2_ * v[i] + (1.0 - b2_) * double(g[i]) * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] = static_cast<T>(p[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

  std::vector<T> state_flat() const {
    std::vector<T> out;
    for (const auto& m : m_) out.insert(out.end(), m.v.begin(), m.v.end());
    for (const auto& v : v_) out.insert(out.end(), v.v.begin(), v.v.end());
    return out;
  }

  void load_state_flat(const std::vector<T>& flat, int64_t t) {
    size_t off = 0;
    auto copy_into = [&](std::vector<T>& dst) {
      require(off + dst.size() <= flat.size(), ErrorCode::kCorruption,
              "optimizer state too short");
      std::copy(flat.begin() + off, flat.begin() + off + dst.size(), dst.begin());
      off += dst.size();
    };
    for (auto& m : m_) copy_into(m.v);
    for (auto& v : v_) copy_into(v.v);
    require(off == flat.size(), ErrorCode::kCorruption,
            "optimizer state size mismatch");
    t_ = t;
  }

 private:
  std::vector<Param<T>*> params_;
  std::vector<Tensor<T>> m_, v_;
  double lr_, b1_, b2_, eps_;
  int64_t t_ = 0;
};

}  // namespace ufema::nn

#endif  // UFEMA_CORE_NN_ADAM_HPP_
