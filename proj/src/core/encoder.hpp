// core/encoder.hpp

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

#ifndef UFEMA_CORE_ENCODER_HPP_
#define UFEMA_CORE_ENCODER_HPP_

#include <memory>
#include <vector>

#include "core/features.hpp"
#include "core/nn/layers.hpp"

namespace ufema {

struct EncoderConfig {
  int n_mels = 80;
  int channels = 64;
  std::vector<int> dilations = {1, 2, 3};
  int kernel = 3;
  int emb_dim = 192;

  void validate() const {
    require_arg(n_mels > 0 && channels > 0 && emb_dim > 0 && !dilations.empty(),
                "bad encoder config");
  }
};

// Compact frame-level extractor: stacked dilated 1-D convolutions over time
// (mel bins as input channels), statistics pooling, linear projection to the
// embedding dimension.
template <class T>
class SpeakerEncoder {
 public:
  explicit SpeakerEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    int in = cfg_.n_mels;
    for (size_t i = 0; i < cfg_.dilations.size(); ++i) {
      convs_.push_back(std::make_unique<nn::Conv1d<T>>(
          "enc" + std::to_string(i), in, cfg_.channels, cfg_.kernel,
          cfg_.dilations[i]));
      bns_.push_back(std::make_unique<nn::BatchNorm<T>>(
          "encbn" + std::to_string(i), cfg_.channels));
      relus_.emplace_back(std::make_unique<nn::Relu<T>>());
      in = cfg_.channels;
    }
    proj_ = std::make_unique<nn::Linear<T>>("proj", 2 * cfg_.channels, cfg_.emb_dim);
  }

  const EncoderConfig& config() const { return cfg_; }

  void init(uint64_t seed) {
    Rng rng(mix_seed(0x454e43u, seed));
    for (auto& c : convs_) c->init(&rng);
    proj_->init(&rng);
  }

  // x: [N, F, L] (mel bins as channels, frames as length) -> [N, D].
  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train) {
    require_arg(x.shape.size() == 3, "encoder expects [N,F,L]");
    require_arg(x.dim(1) == cfg_.n_mels,
                "encoder F mismatch: got " + std::to_string(x.dim(1)) +
                    ", configured " + std::to_string(cfg_.n_mels));
    require_arg(x.dim(2) >= cfg_.kernel * cfg_.dilations.back(),
                "input shorter than the encoder's receptive field");
    nn::Tensor<T> h = x;
    for (size_t i = 0; i < convs_.size(); ++i) {
      h = convs_[i]->forward(h);
      h = bns_[i]->forward(h, train);
      h = relus_[i]->forward(h);
    }
    h = pool_.forward(h);
    return proj_->forward(h);
  }

  nn::Tensor<T> backward(const nn::Tensor<T>& dy) {
    nn::Tensor<T> dh = proj_->backward(dy);
    dh = pool_.backward(dh);
    for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
      dh = relus_[i]->backward(dh);
      dh = bns_[i]->backward(dh);
      dh = convs_[i]->backward(dh);
    }
    return dh;
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    for (size_t i = 0; i < convs_.size(); ++i) {
      convs_[i]->params(&out);
      bns_[i]->params(&out);
    }
    proj_->params(&out);
    return out;
  }

  std::vector<nn::Tensor<T>*> buffers() {
    std::vector<nn::Tensor<T>*> out;
    for (auto& bn : bns_) bn->buffers(&out);
    return out;
  }

  std::vector<T> flatten() { return nn::flatten_values(params(), buffers()); }
  void load_flat(const std::vector<T>& flat) {
    auto ps = params();
    auto bs = buffers();
    nn::unflatten_values(flat, ps, bs);
  }

 private:
  EncoderConfig cfg_;
  std::vector<std::unique_ptr<nn::Conv1d<T>>> convs_;
  std::vector<std::unique_ptr<nn::BatchNorm<T>>> bns_;
  std::vector<std::unique_ptr<nn::Relu<T>>> relus_;
  nn::StatsPooling<T> pool_;
  std::unique_ptr<nn::Linear<T>> proj_;
};

// ---------------------------------------------------------------------------
// Additive-angular-margin softmax head.

struct AamConfig {
  double margin = 0.2;  // radians
  double scale = 30.0;

  void validate() const {
    require_arg(margin >= 0.0 && margin <= 0.5, "AAM margin must be in [0, 0.5]");
    require_arg(scale > 0.0, "AAM scale must be positive");
  }
};

// Class weights are row-normalized inside the forward pass; embeddings are
// L2-normalized the same way. Gradients flow into both the embeddings and
// the raw class-weight matrix.
template <class T>
class AamHead {
 public:
  AamHead(int n_classes, int dim, const AamConfig& cfg)
      : c_(n_classes), d_(dim), cfg_(cfg), w_("aam.w", {n_classes, dim}) {
    cfg_.validate();
  }

  void init(uint64_t seed) {
    Rng rng(mix_seed(0x41414du, seed));
    nn::init_normal(&w_.value, 1.0 / std::sqrt(double(d_)), &rng);
  }

  int n_classes() const { return c_; }
  const AamConfig& config() const { return cfg_; }

  // Returns mean cross-entropy; fills demb (same shape as emb) and
  // accumulates the class-weight gradient. Predictions (argmax over cosine)
  // are reported for accuracy tracking.
  double loss(const nn::Tensor<T>& emb, const std::vector<int>& labels,
              nn::Tensor<T>* demb, std::vector<int>* predictions = nullptr) {
    const int n = emb.dim(0);
    require_arg(n >= 1 && emb.dim(1) == d_, "AAM embedding shape mismatch");
    for (int lab : labels)
      require_arg(lab >= 0 && lab < c_, "label out of range: " + std::to_string(lab));
    require_arg(static_cast<int>(labels.size()) == n, "labels/batch size mismatch");

    // Row-normalize class weights (shared across the batch).
    std::vector<double> wnorm(c_);
    for (int c = 0; c < c_; ++c) {
      double s = 0.0;
      for (int j = 0; j < d_; ++j) {
        const double x = w_.value.v[size_t(c) * d_ + j];
        s += x * x;
      }
      wnorm[c] = std::sqrt(std::max(s, 1e-24));
    }

    if (demb) *demb = nn::Tensor<T>(emb.shape);
    if (predictions) predictions->assign(n, -1);

    const double cm = std::cos(cfg_.margin), sm = std::sin(cfg_.margin);
    double total = 0.0;
    std::vector<double> cosv(c_), logits(c_), p(c_);
    std::vector<double> dW(size_t(c_) * d_, 0.0);
    for (int i = 0; i < n; ++i) {
      const T* e = emb.data() + size_t(i) * d_;
      double en = 0.0;
      for (int j = 0; j < d_; ++j) en += double(e[j]) * e[j];
      en = std::sqrt(std::max(en, 1e-24));
      require_arg(en > 1e-12, "zero-norm embedding in AAM loss");

      int best = 0;
      for (int c = 0; c < c_; ++c) {
        double dot = 0.0;
        for (int j = 0; j < d_; ++j)
          dot += double(e[j]) * w_.value.v[size_t(c) * d_ + j];
        cosv[c] = dot / (en * wnorm[c]);
        if (cosv[c] > cosv[best]) best = c;
      }
      if (predictions) (*predictions)[i] = best;

      const int y = labels[i];
      const double cy = std::clamp(cosv[y], -1.0, 1.0);
      const double sy = std::sqrt(std::max(1.0 - cy * cy, 1e-12));
      for (int c = 0; c < c_; ++c) logits[c] = cfg_.scale * cosv[c];
      logits[y] = cfg_.scale * (cy * cm - sy * sm);

      double mx = logits[0];
      for (int c = 1; c < c_; ++c) mx = std::max(mx, logits[c]);
      double z = 0.0;
      for (int c = 0; c < c_; ++c) {
        p[c] = std::exp(logits[c] - mx);
        z += p[c];
      }
      for (int c = 0; c < c_; ++c) p[c] /= z;
      total += -(logits[y] - mx - std::log(z));

      if (!demb) continue;
      T* de = demb->data() + size_t(i) * d_;
      for (int c = 0; c < c_; ++c) {
        double dlogit = (p[c] - (c == y ? 1.0 : 0.0)) / n;
        double dcos = dlogit * cfg_.scale;
        if (c == y) dcos *= cm + sm * cy / sy;
        // cos = e.w / (|e||w|); grads through both normalizations.
        const double inv = 1.0 / (en * wnorm[c]);
        for (int j = 0; j < d_; ++j) {
          const double wj = w_.value.v[size_t(c) * d_ + j];
          const double ej = e[j];
          de[j] += static_cast<T>(dcos * (wj * inv - cosv[c] * ej / (en * en)));
          dW[size_t(c) * d_ + j] += dcos * (ej * inv - cosv[c] * wj / (wnorm[c] * wnorm[c]));
        }
      }
    }
    if (demb)
      for (size_t k = 0; k < dW.size(); ++k)
        w_.grad.v[k] += static_cast<T>(dW[k]);
    return total / n;
  }

  std::vector<nn::Param<T>*> params() { return {&w_}; }
  nn::Param<T>& weight() { return w_; }

 private:
  int c_, d_;
  AamConfig cfg_;
  nn::Param<T> w_;
};

}  // namespace ufema

#endif  // UFEMA_CORE_ENCODER_HPP_
