// core/unet.hpp

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

#ifndef UFEMA_CORE_UNET_HPP_
#define UFEMA_CORE_UNET_HPP_

#include <memory>
#include <vector>

#include "core/nn/layers.hpp"

namespace ufema {

struct UNetConfig {
  int in_channels = 3;
  std::vector<int> encoder_channels = {32, 64, 128, 256};
  bool use_skips = true;

  int depth() const { return static_cast<int>(encoder_channels.size()); }
  int size_multiple() const { return 1 << depth(); }

  void validate() const {
    require_arg(in_channels >= 1, "UNet needs at least one input channel");
    require_arg(!encoder_channels.empty(), "encoder_channels must be non-empty");
  }
};

// Encoder/decoder fusion network over [N, C, T, F] stacks. Each encoder
// block halves both spatial dims (stride-2 first conv); the decoder restores
// them with 2x2 transposed convolutions. The head is a 1x1 conv over the
// last decoder features concatenated with the raw input, initialized so the
// initial output sits at the per-cell channel mean.
template <class T>
class UNet {
 public:
  explicit UNet(const UNetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const auto& ch = cfg_.encoder_channels;
    int in = cfg_.in_channels;
    for (size_t i = 0; i < ch.size(); ++i) {
      enc_down_.push_back(std::make_unique<nn::Conv2d<T>>(
          "enc" + std::to_string(i) + ".down", in, ch[i], 3, 2, 1));
      enc_conv_.push_back(std::make_unique<nn::Conv2d<T>>(
          "enc" + std::to_string(i) + ".conv", ch[i], ch[i], 3, 1, 1));
      enc_bn_.push_back(std::make_unique<nn::BatchNorm<T>>(
          "enc" + std::to_string(i) + ".bn", ch[i]));
      enc_relu_.emplace_back(std::make_unique<nn::Relu<T>>());
      in = ch[i];
    }
    for (int i = static_cast<int>(ch.size()) - 2; i >= 0; --i) {
      dec_up_.push_back(std::make_unique<nn::ConvTranspose2d<T>>(
          "dec" + std::to_string(i) + ".up", ch[i + 1], ch[i]));
      const int conv_in = cfg_.use_skips ? 2 * ch[i] : ch[i];
      dec_conv_.push_back(std::make_unique<nn::Conv2d<T>>(
          "dec" + std::to_string(i) + ".conv", conv_in, ch[i], 3, 1, 1));
      dec_bn_.push_back(std::make_unique<nn::BatchNorm<T>>(
          "dec" + std::to_string(i) + ".bn", ch[i]));
      dec_relu_.emplace_back(std::make_unique<nn::Relu<T>>());
    }
    top_up_ = std::make_unique<nn::ConvTranspose2d<T>>("top.up", ch[0], ch[0]);
    top_conv_ = std::make_unique<nn::Conv2d<T>>("top.conv", ch[0], ch[0], 3, 1, 1);
    top_bn_ = std::make_unique<nn::BatchNorm<T>>("top.bn", ch[0]);
    head_ = std::make_unique<nn::Conv2d<T>>(
        "head", ch[0] + cfg_.in_channels, 1, 1, 1, 0);
  }

  const UNetConfig& config() const { return cfg_; }

  void init(uint64_t seed) {
    Rng rng(mix_seed(0x554e4554u, seed));
    for (size_t i = 0; i < enc_down_.size(); ++i) {
      enc_down_[i]->init(&rng);
      enc_conv_[i]->init(&rng);
    }
    for (size_t i = 0; i < dec_up_.size(); ++i) {
      dec_up_[i]->init(&rng);
      dec_conv_[i]->init(&rng);
    }
    top_up_->init(&rng);
    top_conv_->init(&rng);
    head_->init(&rng);
    // Warm start near the channel mean: tiny weights on the decoder
    // features, uniform 1/C on the raw input channels.
    std::vector<nn::Param<T>*> hp;
    head_->params(&hp);
    auto& hw = hp[0]->value.v;
    const int c0 = cfg_.encoder_channels[0];
    for (int i = 0; i < c0; ++i) hw[i] = static_cast<T>(0.01 * rng.normal());
    for (int i = 0; i < cfg_.in_channels; ++i)
      hw[c0 + i] = static_cast<T>(1.0 / cfg_.in_channels);
    hp[1]->value.zero();
  }

  // x: [N, in_channels, H, W] with H, W divisible by 2^depth.
  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train) {
    require_arg(x.shape.size() == 4, "UNet expects [N,C,H,W]");
    require_arg(x.dim(1) == cfg_.in_channels,
                "UNet channel-count mismatch: got " + std::to_string(x.dim(1)) +
                    ", configured " + std::to_string(cfg_.in_channels));
    const int mult = cfg_.size_multiple();
    require_arg(x.dim(2) % mult == 0 && x.dim(3) % mult == 0,
                "UNet input dims must be divisible by 2^depth (pad first)");
    input_ = x;
    skips_.clear();
    nn::Tensor<T> h = x;
    for (size_t i = 0; i < enc_down_.size(); ++i) {
      h = enc_down_[i]->forward(h);
      h = enc_conv_[i]->forward(h);
      h = enc_bn_[i]->forward(h, train);
      h = enc_relu_[i]->forward(h);
      if (i + 1 < enc_down_.size()) skips_.push_back(h);
    }
    for (size_t d = 0; d < dec_up_.size(); ++d) {
      h = dec_up_[d]->forward(h);
      if (cfg_.use_skips) {
        skip_ca_.resize(dec_up_.size());
        skip_ca_[d] = h.dim(1);
        h = nn::concat_channels(h, skips_[skips_.size() - 1 - d]);
      }
      h = dec_conv_[d]->forward(h);
      h = dec_bn_[d]->forward(h, train);
      h = dec_relu_[d]->forward(h);
    }
    h = top_up_->forward(h);
    h = top_conv_->forward(h);
    h = top_bn_->forward(h, train);
    h = top_relu_.forward(h);
    h = nn::concat_channels(h, input_);
    return head_->forward(h);
  }

  // dy: [N, 1, H, W]. Returns gradient w.r.t. the input stack.
  nn::Tensor<T> backward(const nn::Tensor<T>& dy) {
    nn::Tensor<T> dh = head_->backward(dy);
    nn::Tensor<T> dtop, dinput;  // dinput: head's bypass path to the raw input
    nn::split_channels(dh, cfg_.encoder_channels[0], &dtop, &dinput);
    dh = top_relu_.backward(dtop);
    dh = top_bn_->backward(dh);
    dh = top_conv_->backward(dh);
    dh = top_up_->backward(dh);

    std::vector<nn::Tensor<T>> dskips(skips_.size());
    for (int d = static_cast<int>(dec_up_.size()) - 1; d >= 0; --d) {
      dh = dec_relu_[d]->backward(dh);
      dh = dec_bn_[d]->backward(dh);
      dh = dec_conv_[d]->backward(dh);
      if (cfg_.use_skips) {
        nn::Tensor<T> dup, dskip;
        nn::split_channels(dh, skip_ca_[d], &dup, &dskip);
        dskips[skips_.size() - 1 - d] = std::move(dskip);
        dh = std::move(dup);
      }
      dh = dec_up_[d]->backward(dh);
    }
    for (int i = static_cast<int>(enc_down_.size()) - 1; i >= 0; --i) {
      if (size_t(i) < skips_.size() && cfg_.use_skips && dskips[i].numel() > 0)
        for (int64_t k = 0; k < dh.numel(); ++k) dh.v[k] += dskips[i].v[k];
      dh = enc_relu_[i]->backward(dh);
      dh = enc_bn_[i]->backward(dh);
      dh = enc_conv_[i]->backward(dh);
      dh = enc_down_[i]->backward(dh);
    }
    for (int64_t k = 0; k < dh.numel(); ++k) dh.v[k] += dinput.v[k];
    return dh;
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    for (size_t i = 0; i < enc_down_.size(); ++i) {
      enc_down_[i]->params(&out);
      enc_conv_[i]->params(&out);
      enc_bn_[i]->params(&out);
    }
    for (size_t i = 0; i < dec_up_.size(); ++i) {
      dec_up_[i]->params(&out);
      dec_conv_[i]->params(&out);
      dec_bn_[i]->params(&out);
    }
    top_up_->params(&out);
    top_conv_->params(&out);
    top_bn_->params(&out);
    head_->params(&out);
    return out;
  }

  std::vector<nn::Tensor<T>*> buffers() {
    std::vector<nn::Tensor<T>*> out;
    for (auto& bn : enc_bn_) bn->buffers(&out);
    for (auto& bn : dec_bn_) bn->buffers(&out);
    top_bn_->buffers(&out);
    return out;
  }

  std::vector<T> flatten() { return nn::flatten_values(params(), buffers()); }
  void load_flat(const std::vector<T>& flat) {
    auto ps = params();
    auto bs = buffers();
    nn::unflatten_values(flat, ps, bs);
  }

 private:
  template <class U>
  using Ptr = std::unique_ptr<U>;

  UNetConfig cfg_;
  std::vector<Ptr<nn::Conv2d<T>>> enc_down_, enc_conv_, dec_conv_;
  std::vector<Ptr<nn::BatchNorm<T>>> enc_bn_, dec_bn_;
  std::vector<Ptr<nn::Relu<T>>> enc_relu_, dec_relu_;
  std::vector<Ptr<nn::ConvTranspose2d<T>>> dec_up_;
  Ptr<nn::ConvTranspose2d<T>> top_up_;
  Ptr<nn::Conv2d<T>> top_conv_;
  Ptr<nn::BatchNorm<T>> top_bn_;
  nn::Relu<T> top_relu_;
  Ptr<nn::Conv2d<T>> head_;

  nn::Tensor<T> input_;
  std::vector<nn::Tensor<T>> skips_;
  std::vector<int> skip_ca_;
};

}  // namespace ufema

#endif  // UFEMA_CORE_UNET_HPP_
