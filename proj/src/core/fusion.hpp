// core/fusion.hpp

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

#ifndef UFEMA_CORE_FUSION_HPP_
#define UFEMA_CORE_FUSION_HPP_

#include "core/features.hpp"
#include "core/unet.hpp"

namespace ufema {

// Symmetric zero-pad [N,C,T,F] up to multiples of the UNet's 2^depth, run the
// net, and crop back to T x F. Templated so gradient checks can run in
// double.
template <class T>
struct PadSpec {
  int pt = 0, pb = 0, pl = 0, pr = 0;
};

template <class T>
nn::Tensor<T> fuse_forward(UNet<T>* net, const nn::Tensor<T>& x, bool train,
                           PadSpec<T>* pad_out) {
  const int mult = net->config().size_multiple();
  const int t = x.dim(2), f = x.dim(3);
  const int pad_t = (mult - t % mult) % mult;
  const int pad_f = (mult - f % mult) % mult;
  PadSpec<T> p;
  p.pt = pad_t / 2;
  p.pb = pad_t - p.pt;
  p.pl = pad_f / 2;
  p.pr = pad_f - p.pl;
  if (pad_out) *pad_out = p;
  nn::Tensor<T> xp = (pad_t || pad_f) ? nn::pad_hw(x, p.pt, p.pb, p.pl, p.pr) : x;
  nn::Tensor<T> y = net->forward(xp, train);
  return (pad_t || pad_f) ? nn::crop_hw(y, p.pt, p.pb, p.pl, p.pr) : y;
}

template <class T>
nn::Tensor<T> fuse_backward(UNet<T>* net, const nn::Tensor<T>& dy,
                            const PadSpec<T>& p) {
  nn::Tensor<T> d = (p.pt || p.pb || p.pl || p.pr)
                        ? nn::pad_hw(dy, p.pt, p.pb, p.pl, p.pr)
                        : dy;
  nn::Tensor<T> dx = net->backward(d);
  return (p.pt || p.pb || p.pl || p.pr) ? nn::crop_hw(dx, p.pt, p.pb, p.pl, p.pr)
                                        : dx;
}

// Pack a channel stack into a [1, C, T, F] tensor.
nn::Tensor<float> to_tensor(const MultiChannelFeature& z);

// Inference-mode fusion of a single stack; output is exactly T x F.
MelFeature fuse(UNet<float>* net, const MultiChannelFeature& z);

}  // namespace ufema

#endif  // UFEMA_CORE_FUSION_HPP_
