// core/nn/layers.hpp

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

#ifndef UFEMA_CORE_NN_LAYERS_HPP_
#define UFEMA_CORE_NN_LAYERS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <vector>

#include "core/nn/tensor.hpp"

namespace ufema::nn {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// He-style normal init.
template <class T>
void init_normal(Tensor<T>* t, double stddev, Rng* rng) {
  for (auto& x : t->v) x = static_cast<T>(stddev * rng->normal());
}

// ---------------------------------------------------------------------------
// 2-D convolution, square kernel, zero padding.

template <class T>
class Conv2d {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad)
      : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad),
        w_(name + ".w", {out_ch, in_ch * kernel * kernel}),
        b_(name + ".b", {out_ch}) {}

  void init(Rng* rng) {
    init_normal(&w_.value, std::sqrt(2.0 / (in_ch_ * k_ * k_)), rng);
    b_.value.zero();
  }

  std::vector<int> out_shape(const std::vector<int>& in) const {
    const int oh = (in[2] + 2 * pad_ - k_) / stride_ + 1;
    const int ow = (in[3] + 2 * pad_ - k_) / stride_ + 1;
    return {in[0], out_ch_, oh, ow};
  }

  Tensor<T> forward(const Tensor<T>& x) {
    require_arg(x.shape.size() == 4 && x.dim(1) == in_ch_,
                "conv2d channel mismatch");
    x_ = x;
    Tensor<T> y(out_shape(x.shape));
    const int oh = y.dim(2), ow = y.dim(3);
    const int64_t ohw = int64_t(oh) * ow;
    std::vector<T> col(size_t(in_ch_) * k_ * k_ * ohw);
    for (int n = 0; n < x.dim(0); ++n) {
      im2col(x, n, col.data(), oh, ow);
      ConstMatMap<T> W(w_.value.data(), out_ch_, in_ch_ * k_ * k_);
      ConstMatMap<T> C(col.data(), in_ch_ * k_ * k_, ohw);
      MatMap<T> Y(y.data() + size_t(n) * out_ch_ * ohw, out_ch_, ohw);
      Y.noalias() = W * C;
      for (int c = 0; c < out_ch_; ++c) Y.row(c).array() += b_.value.v[c];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int oh = dy.dim(2), ow = dy.dim(3);
    const int64_t ohw = int64_t(oh) * ow;
    Tensor<T> dx(x_.shape);
    std::vector<T> col(size_t(in_ch_) * k_ * k_ * ohw);
    std::vector<T> dcol(col.size());
    MatMap<T> dW(w_.grad.data(), out_ch_, in_ch_ * k_ * k_);
    for (int n = 0; n < x_.dim(0); ++n) {
      im2col(x_, n, col.data(), oh, ow);
      ConstMatMap<T> C(col.data(), in_ch_ * k_ * k_, ohw);
      ConstMatMap<T> dY(dy.data() + size_t(n) * out_ch_ * ohw, out_ch_, ohw);
      dW.noalias() += dY * C.transpose();
      // Fixed-order scalar sums: Eigen's reductions peel by runtime pointer
      // alignment, which would make the result depend on heap addresses.
      for (int c = 0; c < out_ch_; ++c) {
        const T* r = dy.data() + (size_t(n) * out_ch_ + c) * ohw;
        T s = 0;
        for (int64_t i = 0; i < ohw; ++i) s += r[i];
        b_.grad.v[c] += s;
      }
      ConstMatMap<T> W(w_.value.data(), out_ch_, in_ch_ * k_ * k_);
      MatMap<T> dC(dcol.data(), in_ch_ * k_ * k_, ohw);
      dC.noalias() = W.transpose() * dY;
      col2im(dcol.data(), &dx, n, oh, ow);
    }
    return dx;
  }

  void params(std::vector<Param<T>*>* out) {
    out->push_back(&w_);
    out->push_back(&b_);
  }

  void release_cache() { x_ = Tensor<T>(); }

 private:
  void im2col(const Tensor<T>& x, int n, T* col, int oh, int ow) const {
    const int h = x.dim(2), w = x.dim(3);
    const int64_t hw = int64_t(h) * w, ohw = int64_t(oh) * ow;
    const T* xp = x.data() + size_t(n) * in_ch_ * hw;
    for (int c = 0; c < in_ch_; ++c) {
      for (int ki = 0; ki < k_; ++ki) {
        for (int kj = 0; kj < k_; ++kj) {
          T* dst = col + (size_t(c) * k_ * k_ + ki * k_ + kj) * ohw;
          for (int oi = 0; oi < oh; ++oi) {
            const int ii = oi * stride_ + ki - pad_;
            if (ii < 0 || ii >= h) {
              std::fill(dst + int64_t(oi) * ow, dst + int64_t(oi + 1) * ow, T(0));
              continue;
            }
            const T* src_row = xp + size_t(c) * hw + size_t(ii) * w;
            for (int oj = 0; oj < ow; ++oj) {
              const int jj = oj * stride_ + kj - pad_;
              dst[int64_t(oi) * ow + oj] =
                  (jj < 0 || jj >= w) ? T(0) : src_row[jj];
            }
          }
        }
      }
    }
  }

  void col2im(const T* col, Tensor<T>* dx, int n, int oh, int ow) const {
    const int h = dx->dim(2), w = dx->dim(3);
    const int64_t hw = int64_t(h) * w, ohw = int64_t(oh) * ow;
    T* xp = dx->data() + size_t(n) * in_ch_ * hw;
    for (int c = 0; c < in_ch_; ++c) {
      for (int ki = 0; ki < k_; ++ki) {
        for (int kj = 0; kj < k_; ++kj) {
          const T* src = col + (size_t(c) * k_ * k_ + ki * k_ + kj) * ohw;
          for (int oi = 0; oi < oh; ++oi) {
            const int ii = oi * stride_ + ki - pad_;
            if (ii < 0 || ii >= h) continue;
            T* dst_row = xp + size_t(c) * hw + size_t(ii) * w;
            for (int oj = 0; oj < ow; ++oj) {
              const int jj = oj * stride_ + kj - pad_;
              if (jj >= 0 && jj < w) dst_row[jj] += src[int64_t(oi) * ow + oj];
            }
          }
        }
      }
    }
  }

  int in_ch_, out_ch_, k_, stride_, pad_;
  Param<T> w_, b_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// 2x2 stride-2 transposed convolution (exact x2 upsampling, no overlap).

template <class T>
class ConvTranspose2d {
 public:
  ConvTranspose2d(std::string name, int in_ch, int out_ch)
      : in_ch_(in_ch), out_ch_(out_ch),
        w_(name + ".w", {in_ch, out_ch * 4}), b_(name + ".b", {out_ch}) {}

  void init(Rng* rng) {
    init_normal(&w_.value, std::sqrt(2.0 / in_ch_), rng);
    b_.value.zero();
  }

  Tensor<T> forward(const Tensor<T>& x) {
    require_arg(x.shape.size() == 4 && x.dim(1) == in_ch_,
                "convT channel mismatch");
    x_ = x;
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t hw = int64_t(h) * w;
    Tensor<T> y({n, out_ch_, 2 * h, 2 * w});
    std::vector<T> y4(size_t(out_ch_) * 4 * hw);
    for (int s = 0; s < n; ++s) {
      ConstMatMap<T> X(x.data() + size_t(s) * in_ch_ * hw, in_ch_, hw);
      ConstMatMap<T> W(w_.value.data(), in_ch_, out_ch_ * 4);
      MatMap<T> Y4(y4.data(), out_ch_ * 4, hw);
      Y4.noalias() = W.transpose() * X;
      T* yp = y.data() + size_t(s) * out_ch_ * 4 * hw;
      for (int c = 0; c < out_ch_; ++c) {
        for (int dh = 0; dh < 2; ++dh) {
          for (int dw = 0; dw < 2; ++dw) {
            const T* src = y4.data() + (size_t(c) * 4 + dh * 2 + dw) * hw;
            for (int i = 0; i < h; ++i) {
              T* dst = yp + size_t(c) * 4 * hw + size_t(2 * i + dh) * 2 * w + dw;
              const T* sr = src + size_t(i) * w;
              for (int j = 0; j < w; ++j) dst[2 * j] = sr[j] + b_.value.v[c];
            }
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
    const int64_t hw = int64_t(h) * w;
    Tensor<T> dx(x_.shape);
    std::vector<T> dy4(size_t(out_ch_) * 4 * hw);
    MatMap<T> dW(w_.grad.data(), in_ch_, out_ch_ * 4);
    for (int s = 0; s < n; ++s) {
      const T* dyp = dy.data() + size_t(s) * out_ch_ * 4 * hw;
      for (int c = 0; c < out_ch_; ++c) {
        double bacc = 0.0;
        for (int dh = 0; dh < 2; ++dh) {
          for (int dw_ = 0; dw_ < 2; ++dw_) {
            T* dst = dy4.data() + (size_t(c) * 4 + dh * 2 + dw_) * hw;
            for (int i = 0; i < h; ++i) {
              const T* sr = dyp + size_t(c) * 4 * hw + size_t(2 * i + dh) * 2 * w + dw_;
              for (int j = 0; j < w; ++j) {
                dst[size_t(i) * w + j] = sr[2 * j];
                bacc += sr[2 * j];
              }
            }
          }
        }
        b_.grad.v[c] += static_cast<T>(bacc);
      }
      ConstMatMap<T> X(x_.data() + size_t(s) * in_ch_ * hw, in_ch_, hw);
      ConstMatMap<T> dY4(dy4.data(), out_ch_ * 4, hw);
      dW.noalias() += X * dY4.transpose();
      ConstMatMap<T> W(w_.value.data(), in_ch_, out_ch_ * 4);
      MatMap<T> dX(dx.data() + size_t(s) * in_ch_ * hw, in_ch_, hw);
      dX.noalias() = W * dY4;
    }
    return dx;
  }

  void params(std::vector<Param<T>*>* out) {
    out->push_back(&w_);
    out->push_back(&b_);
  }
  void release_cache() { x_ = Tensor<T>(); }

 private:
  int in_ch_, out_ch_;
  Param<T> w_, b_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Batch normalization over [N, C, S] or [N, C, H, W] (stats per channel).

template <class T>
class BatchNorm {
 public:
  BatchNorm(std::string name, int channels, double eps = 1e-5, double momentum = 0.1)
      : c_(channels), eps_(eps), momentum_(momentum),
        gamma_(name + ".gamma", {channels}), beta_(name + ".beta", {channels}),
        running_mean_({channels}), running_var_({channels}) {
    std::fill(gamma_.value.v.begin(), gamma_.value.v.end(), T(1));
    std::fill(running_var_.v.begin(), running_var_.v.end(), T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    require_arg(x.shape.size() >= 3 && x.dim(1) == c_, "batchnorm shape mismatch");
    const int n = x.dim(0);
    const int64_t spatial = x.numel() / (int64_t(n) * c_);
    if (train)
      require_arg(n >= 2, "batchnorm in train mode requires batch >= 2");
    train_ = train;
    const int64_t cnt = int64_t(n) * spatial;

    Tensor<T> y(x.shape);
    xhat_ = Tensor<T>(x.shape);
    invstd_.assign(c_, T(0));
    mean_.assign(c_, T(0));
    for (int c = 0; c < c_; ++c) {
      double mu, var;
      if (train) {
        double acc = 0.0, acc2 = 0.0;
        for (int s = 0; s < n; ++s) {
          const T* p = x.data() + (size_t(s) * c_ + c) * spatial;
          for (int64_t i = 0; i < spatial; ++i) {
            acc += p[i];
            acc2 += double(p[i]) * p[i];
          }
        }
        mu = acc / cnt;
        var = acc2 / cnt - mu * mu;
        if (var < 0) var = 0;
        running_mean_.v[c] = static_cast<T>((1 - momentum_) * running_mean_.v[c] +
                                            momentum_ * mu);
        running_var_.v[c] = static_cast<T>((1 - momentum_) * running_var_.v[c] +
                                           momentum_ * var);
      } else {
        mu = running_mean_.v[c];
        var = running_var_.v[c];
      }
      const T istd = static_cast<T>(1.0 / std::sqrt(var + eps_));
      mean_[c] = static_cast<T>(mu);
      invstd_[c] = istd;
      for (int s = 0; s < n; ++s) {
        const T* p = x.data() + (size_t(s) * c_ + c) * spatial;
        T* xh = xhat_.data() + (size_t(s) * c_ + c) * spatial;
        T* yp = y.data() + (size_t(s) * c_ + c) * spatial;
        const T g = gamma_.value.v[c], b = beta_.value.v[c];
        for (int64_t i = 0; i < spatial; ++i) {
          xh[i] = (p[i] - static_cast<T>(mu)) * istd;
          yp[i] = g * xh[i] + b;
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int n = dy.dim(0);
    const int64_t spatial = dy.numel() / (int64_t(n) * c_);
    const int64_t cnt = int64_t(n) * spatial;
    Tensor<T> dx(dy.shape);
    for (int c = 0; c < c_; ++c) {
      double dg = 0.0, db = 0.0, dxh_sum = 0.0, dxh_xhat_sum = 0.0;
      for (int s = 0; s < n; ++s) {
        const T* dyp = dy.data() + (size_t(s) * c_ + c) * spatial;
        const T* xh = xhat_.data() + (size_t(s) * c_ + c) * spatial;
        for (int64_t i = 0; i < spatial; ++i) {
          dg += double(dyp[i]) * xh[i];
          db += dyp[i];
          dxh_sum += double(dyp[i]) * gamma_.value.v[c];
          dxh_xhat_sum += double(dyp[i]) * gamma_.value.v[c] * xh[i];
        }
      }
      gamma_.grad.v[c] += static_cast<T>(dg);
      beta_.grad.v[c] += static_cast<T>(db);
      const T g = gamma_.value.v[c], istd = invstd_[c];
      for (int s = 0; s < n; ++s) {
        const T* dyp = dy.data() + (size_t(s) * c_ + c) * spatial;
        const T* xh = xhat_.data() + (size_t(s) * c_ + c) * spatial;
        T* dxp = dx.data() + (size_t(s) * c_ + c) * spatial;
        for (int64_t i = 0; i < spatial; ++i) {
          const double dxh = double(dyp[i]) * g;
          double v = dxh;
          if (train_)
            v = dxh - dxh_sum / cnt - double(xh[i]) * dxh_xhat_sum / cnt;
          dxp[i] = static_cast<T>(v * istd);
        }
      }
    }
    return dx;
  }

  void params(std::vector<Param<T>*>* out) {
    out->push_back(&gamma_);
    out->push_back(&beta_);
  }
  void buffers(std::vector<Tensor<T>*>* out) {
    out->push_back(&running_mean_);
    out->push_back(&running_var_);
  }
  void release_cache() { xhat_ = Tensor<T>(); }

 private:
  int c_;
  double eps_, momentum_;
  bool train_ = true;
  Param<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<T> invstd_, mean_;
};

// ---------------------------------------------------------------------------

template <class T>
class Relu {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    y_ = x;
    for (auto& v : y_.v) v = v > T(0) ? v : T(0);
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape);
    for (int64_t i = 0; i < dy.numel(); ++i)
      dx.v[i] = y_.v[i] > T(0) ? dy.v[i] : T(0);
    return dx;
  }
  void release_cache() { y_ = Tensor<T>(); }

 private:
  Tensor<T> y_;
};

template <class T>
class Sigmoid {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    y_ = Tensor<T>(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i)
      y_.v[i] = T(1) / (T(1) + std::exp(-x.v[i]));
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape);
    for (int64_t i = 0; i < dy.numel(); ++i)
      dx.v[i] = dy.v[i] * y_.v[i] * (T(1) - y_.v[i]);
    return dx;
  }

 private:
  Tensor<T> y_;
};

template <class T>
class Linear {
 public:
  Linear(std::string name, int in, int out)
      : in_(in), out_(out), w_(name + ".w", {out, in}), b_(name + ".b", {out}) {}

  void init(Rng* rng) {
    init_normal(&w_.value, std::sqrt(2.0 / in_), rng);
    b_.value.zero();
  }

  Tensor<T> forward(const Tensor<T>& x) {
    require_arg(x.shape.size() == 2 && x.dim(1) == in_, "linear shape mismatch");
    x_ = x;
    Tensor<T> y({x.dim(0), out_});
    ConstMatMap<T> X(x.data(), x.dim(0), in_);
    ConstMatMap<T> W(w_.value.data(), out_, in_);
    MatMap<T> Y(y.data(), x.dim(0), out_);
    Y.noalias() = X * W.transpose();
    for (int i = 0; i < x.dim(0); ++i)
      for (int j = 0; j < out_; ++j) Y(i, j) += b_.value.v[j];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(x_.shape);
    ConstMatMap<T> dY(dy.data(), dy.dim(0), out_);
    ConstMatMap<T> X(x_.data(), x_.dim(0), in_);
    MatMap<T> dW(w_.grad.data(), out_, in_);
    dW.noalias() += dY.transpose() * X;
    // Fixed-order scalar sums; see Conv2d::backward.
    for (int j = 0; j < out_; ++j) {
      T s = 0;
      for (int i = 0; i < dy.dim(0); ++i) s += dy.data()[size_t(i) * out_ + j];
      b_.grad.v[j] += s;
    }
    ConstMatMap<T> W(w_.value.data(), out_, in_);
    MatMap<T> dX(dx.data(), dx.dim(0), in_);
    dX.noalias() = dY * W;
    return dx;
  }

  void params(std::vector<Param<T>*>* out) {
    out->push_back(&w_);
    out->push_back(&b_);
  }

 private:
  int in_, out_;
  Param<T> w_, b_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Dilated 1-D convolution over [N, C, L], same padding.

template <class T>
class Conv1d {
 public:
  Conv1d(std::string name, int in_ch, int out_ch, int kernel, int dilation)
      : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), dil_(dilation),
        pad_(dilation * (kernel - 1) / 2),
        w_(name + ".w", {out_ch, in_ch * kernel}), b_(name + ".b", {out_ch}) {}

  void init(Rng* rng) {
    init_normal(&w_.value, std::sqrt(2.0 / (in_ch_ * k_)), rng);
    b_.value.zero();
  }

  Tensor<T> forward(const Tensor<T>& x) {
    require_arg(x.shape.size() == 3 && x.dim(1) == in_ch_, "conv1d shape mismatch");
    x_ = x;
    const int n = x.dim(0), L = x.dim(2);
    Tensor<T> y({n, out_ch_, L});
    std::vector<T> col(size_t(in_ch_) * k_ * L);
    for (int s = 0; s < n; ++s) {
      im2col(x, s, col.data(), L);
      ConstMatMap<T> W(w_.value.data(), out_ch_, in_ch_ * k_);
      ConstMatMap<T> C(col.data(), in_ch_ * k_, L);
      MatMap<T> Y(y.data() + size_t(s) * out_ch_ * L, out_ch_, L);
      Y.noalias() = W * C;
      for (int c = 0; c < out_ch_; ++c) Y.row(c).array() += b_.value.v[c];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int n = x_.dim(0), L = x_.dim(2);
    Tensor<T> dx(x_.shape);
    std::vector<T> col(size_t(in_ch_) * k_ * L), dcol(col.size());
    MatMap<T> dW(w_.grad.data(), out_ch_, in_ch_ * k_);
    for (int s = 0; s < n; ++s) {
      im2col(x_, s, col.data(), L);
      ConstMatMap<T> C(col.data(), in_ch_ * k_, L);
      ConstMatMap<T> dY(dy.data() + size_t(s) * out_ch_ * L, out_ch_, L);
      dW.noalias() += dY * C.transpose();
      // Fixed-order scalar sums; see Conv2d::backward.
      for (int c = 0; c < out_ch_; ++c) {
        const T* r = dy.data() + (size_t(s) * out_ch_ + c) * L;
        T acc = 0;
        for (int i = 0; i < L; ++i) acc += r[i];
        b_.grad.v[c] += acc;
      }
      ConstMatMap<T> W(w_.value.data(), out_ch_, in_ch_ * k_);
      MatMap<T> dC(dcol.data(), in_ch_ * k_, L);
      dC.noalias() = W.transpose() * dY;
      // col2im
      T* dxp = dx.data() + size_t(s) * in_ch_ * L;
      for (int c = 0; c < in_ch_; ++c)
        for (int ki = 0; ki < k_; ++ki) {
          const T* src = dcol.data() + (size_t(c) * k_ + ki) * L;
          for (int i = 0; i < L; ++i) {
            const int ii = i + ki * dil_ - pad_;
            if (ii >= 0 && ii < L) dxp[size_t(c) * L + ii] += src[i];
          }
        }
    }
    return dx;
  }

  void params(std::vector<Param<T>*>* out) {
    out->push_back(&w_);
    out->push_back(&b_);
  }

 private:
  void im2col(const Tensor<T>& x, int s, T* col, int L) const {
    const T* xp = x.data() + size_t(s) * in_ch_ * L;
    for (int c = 0; c < in_ch_; ++c)
      for (int ki = 0; ki < k_; ++ki) {
        T* dst = col + (size_t(c) * k_ + ki) * L;
        for (int i = 0; i < L; ++i) {
          const int ii = i + ki * dil_ - pad_;
          dst[i] = (ii < 0 || ii >= L) ? T(0) : xp[size_t(c) * L + ii];
        }
      }
  }

  int in_ch_, out_ch_, k_, dil_, pad_;
  Param<T> w_, b_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Statistics pooling: [N, C, L] -> [N, 2C] (per-channel mean and std).

template <class T>
class StatsPooling {
 public:
  explicit StatsPooling(double eps = 1e-8) : eps_(eps) {}

  Tensor<T> forward(const Tensor<T>& x) {
    require_arg(x.shape.size() == 3, "stats pooling expects [N,C,L]");
    x_ = x;
    const int n = x.dim(0), c = x.dim(1), L = x.dim(2);
    Tensor<T> y({n, 2 * c});
    mean_ = Tensor<T>({n, c});
    std_ = Tensor<T>({n, c});
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch) {
        const T* p = x.data() + (size_t(s) * c + ch) * L;
        double mu = 0.0;
        for (int i = 0; i < L; ++i) mu += p[i];
        mu /= L;
        double var = 0.0;
        for (int i = 0; i < L; ++i) var += (p[i] - mu) * (p[i] - mu);
        var /= L;
        const double sd = std::sqrt(var + eps_);
        mean_.v[size_t(s) * c + ch] = static_cast<T>(mu);
        std_.v[size_t(s) * c + ch] = static_cast<T>(sd);
        y.v[size_t(s) * 2 * c + ch] = static_cast<T>(mu);
        y.v[size_t(s) * 2 * c + c + ch] = static_cast<T>(sd);
      }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int n = x_.dim(0), c = x_.dim(1), L = x_.dim(2);
    Tensor<T> dx(x_.shape);
    for (int s = 0; s < n; ++s)
      for (int ch = 0; ch < c; ++ch) {
        const T dmu = dy.v[size_t(s) * 2 * c + ch];
        const T dsd = dy.v[size_t(s) * 2 * c + c + ch];
        const T mu = mean_.v[size_t(s) * c + ch];
        const T sd = std_.v[size_t(s) * c + ch];
        const T* p = x_.data() + (size_t(s) * c + ch) * L;
        T* d = dx.data() + (size_t(s) * c + ch) * L;
        for (int i = 0; i < L; ++i)
          d[i] = dmu / L + dsd * (p[i] - mu) / (sd * L);
      }
    return dx;
  }

 private:
  double eps_;
  Tensor<T> x_, mean_, std_;
};

// ---------------------------------------------------------------------------
// Channel concat / split for [N, C, H, W].

template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_arg(a.shape.size() == 4 && b.shape.size() == 4 && a.dim(0) == b.dim(0) &&
                  a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
              "concat shape mismatch");
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  const int64_t hw = int64_t(a.dim(2)) * a.dim(3);
  Tensor<T> y({n, ca + cb, a.dim(2), a.dim(3)});
  for (int s = 0; s < n; ++s) {
    std::copy(a.data() + size_t(s) * ca * hw, a.data() + size_t(s + 1) * ca * hw,
              y.data() + size_t(s) * (ca + cb) * hw);
    std::copy(b.data() + size_t(s) * cb * hw, b.data() + size_t(s + 1) * cb * hw,
              y.data() + size_t(s) * (ca + cb) * hw + size_t(ca) * hw);
  }
  return y;
}

template <class T>
void split_channels(const Tensor<T>& dy, int ca, Tensor<T>* da, Tensor<T>* db) {
  const int n = dy.dim(0), cb = dy.dim(1) - ca;
  const int64_t hw = int64_t(dy.dim(2)) * dy.dim(3);
  *da = Tensor<T>({n, ca, dy.dim(2), dy.dim(3)});
  *db = Tensor<T>({n, cb, dy.dim(2), dy.dim(3)});
  for (int s = 0; s < n; ++s) {
    std::copy(dy.data() + size_t(s) * (ca + cb) * hw,
              dy.data() + size_t(s) * (ca + cb) * hw + size_t(ca) * hw,
              da->data() + size_t(s) * ca * hw);
    std::copy(dy.data() + size_t(s) * (ca + cb) * hw + size_t(ca) * hw,
              dy.data() + size_t(s + 1) * (ca + cb) * hw,
              db->data() + size_t(s) * cb * hw);
  }
}

// Symmetric zero padding of [N, C, H, W] to (H+pt+pb, W+pl+pr).
template <class T>
Tensor<T> pad_hw(const Tensor<T>& x, int pt, int pb, int pl, int pr) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> y({n, c, h + pt + pb, w + pl + pr});
  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < h; ++i) {
        const T* src = x.data() + ((size_t(s) * c + ch) * h + i) * w;
        T* dst = y.data() + ((size_t(s) * c + ch) * (h + pt + pb) + i + pt) *
                     (w + pl + pr) + pl;
        std::copy(src, src + w, dst);
      }
  return y;
}

// Crop back (adjoint of pad_hw).
template <class T>
Tensor<T> crop_hw(const Tensor<T>& x, int pt, int pb, int pl, int pr) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2) - pt - pb,
            w = x.dim(3) - pl - pr;
  Tensor<T> y({n, c, h, w});
  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < h; ++i) {
        const T* src = x.data() + ((size_t(s) * c + ch) * x.dim(2) + i + pt) *
                           x.dim(3) + pl;
        T* dst = y.data() + ((size_t(s) * c + ch) * h + i) * w;
        std::copy(src, src + w, dst);
      }
  return y;
}

}  // namespace ufema::nn

#endif  // UFEMA_CORE_NN_LAYERS_HPP_
