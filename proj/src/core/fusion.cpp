// core/fusion.cpp

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

#include "core/fusion.hpp"

namespace ufema {

nn::Tensor<float> to_tensor(const MultiChannelFeature& z) {
  require_arg(!z.channels.empty(), "empty channel stack");
  const int c = z.n_channels(), t = z.t(), f = z.f();
  nn::Tensor<float> x({1, c, t, f});
  for (int ch = 0; ch < c; ++ch)
    std::copy(z.channels[ch].values.begin(), z.channels[ch].values.end(),
              x.data() + size_t(ch) * t * f);
  return x;
}

MelFeature fuse(UNet<float>* net, const MultiChannelFeature& z) {
  auto x = to_tensor(z);
  PadSpec<float> pad;
  auto y = fuse_forward(net, x, /*train=*/false, &pad);
  MelFeature out;
  out.t = z.t();
  out.f = z.f();
  out.frame_hop_s = z.channels[0].frame_hop_s;
  out.frame_len_s = z.channels[0].frame_len_s;
  out.values.assign(y.v.begin(), y.v.end());
  return out;
}

}  // namespace ufema
