#include "pixelgame/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>

namespace pixelgame {

std::string to_string(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Column buffer rows are ordered (channel, ky, kx) to match the weight layout.
template <typename T>
void im2col(const T* x, int channels, int h, int w, int k, int d, T* col) {
  const int half = k / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    const T* src = x + c * plane;
    for (int ky = 0; ky < k; ++ky) {
      const int oy = (ky - half) * d;
      for (int kx = 0; kx < k; ++kx) {
        const int ox = (kx - half) * d;
        T* row = col + (static_cast<std::size_t>((c * k + ky) * k + kx)) * plane;
        const int x_lo = std::max(0, -ox);
        const int x_hi = std::min(w, w - ox);
        for (int y = 0; y < h; ++y) {
          T* dst = row + static_cast<std::size_t>(y) * w;
          const int sy = y + oy;
          if (sy < 0 || sy >= h || x_lo >= x_hi) {
            std::memset(dst, 0, sizeof(T) * w);
            continue;
          }
          if (x_lo > 0) std::memset(dst, 0, sizeof(T) * x_lo);
          std::memcpy(dst + x_lo, src + static_cast<std::size_t>(sy) * w + x_lo + ox,
                      sizeof(T) * (x_hi - x_lo));
          if (x_hi < w) std::memset(dst + x_hi, 0, sizeof(T) * (w - x_hi));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int channels, int h, int w, int k, int d, T* dx) {
  const int half = k / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < channels; ++c) {
    T* dst = dx + c * plane;
    for (int ky = 0; ky < k; ++ky) {
      const int oy = (ky - half) * d;
      for (int kx = 0; kx < k; ++kx) {
        const int ox = (kx - half) * d;
        const T* row = col + (static_cast<std::size_t>((c * k + ky) * k + kx)) * plane;
        const int x_lo = std::max(0, -ox);
        const int x_hi = std::min(w, w - ox);
        if (x_lo >= x_hi) continue;
        for (int y = 0; y < h; ++y) {
          const int sy = y + oy;
          if (sy < 0 || sy >= h) continue;
          const T* s = row + static_cast<std::size_t>(y) * w;
          T* t = dst + static_cast<std::size_t>(sy) * w + ox;
          for (int x = x_lo; x < x_hi; ++x) t[x] += s[x];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Conv2d<T>::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int dilation,
                  bool bias)
    : weight(name + ".weight", Shape{out_channels, in_channels, kernel, kernel}),
      in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      dilation_(dilation),
      has_bias_(bias) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || kernel % 2 == 0 || dilation < 1) {
    fail(ErrorKind::Config, "invalid convolution geometry for " + name);
  }
  if (bias) this->bias = Param<T>(name + ".bias", Shape{1, out_channels, 1, 1});
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const {
  const Shape s = x.shape();
  if (s.c != in_) {
    fail(ErrorKind::Dimension, weight.name + ": expected " + std::to_string(in_) +
                                   " input channels, got " + std::to_string(s.c));
  }
  Tensor<T> y(Shape{s.n, out_, s.h, s.w});
  const int hw = static_cast<int>(s.plane());
  const int kdim = in_ * kernel_ * kernel_;
  ConstMatMap<T> wmat(weight.value.data(), out_, kdim);
  std::vector<T> col;
  if (kernel_ > 1) col.resize(static_cast<std::size_t>(kdim) * hw);
  for (int n = 0; n < s.n; ++n) {
    const T* src = x.sample(n);
    if (kernel_ > 1) {
      im2col(src, in_, s.h, s.w, kernel_, dilation_, col.data());
      src = col.data();
    }
    MatMap<T> ymat(y.sample(n), out_, hw);
    ymat.noalias() = wmat * ConstMatMap<T>(src, kdim, hw);
    if (has_bias_) {
      for (int o = 0; o < out_; ++o) ymat.row(o).array() += bias.value[o];
    }
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& x, const Tensor<T>& dy, bool need_input_grad) {
  const Shape s = x.shape();
  const int hw = static_cast<int>(s.plane());
  const int kdim = in_ * kernel_ * kernel_;
  ConstMatMap<T> wmat(weight.value.data(), out_, kdim);
  MatMap<T> dw(weight.grad.data(), out_, kdim);
  Tensor<T> dx;
  if (need_input_grad) dx = Tensor<T>(s);
  std::vector<T> col;
  std::vector<T> dcol;
  if (kernel_ > 1) {
    col.resize(static_cast<std::size_t>(kdim) * hw);
    if (need_input_grad) dcol.resize(col.size());
  }
  for (int n = 0; n < s.n; ++n) {
    ConstMatMap<T> dymat(dy.sample(n), out_, hw);
    const T* src = x.sample(n);
    if (kernel_ > 1) {
      im2col(src, in_, s.h, s.w, kernel_, dilation_, col.data());
      src = col.data();
    }
    dw.noalias() += dymat * ConstMatMap<T>(src, kdim, hw).transpose();
    if (has_bias_) {
      for (int o = 0; o < out_; ++o) bias.grad[o] += dymat.row(o).sum();
    }
    if (!need_input_grad) continue;
    if (kernel_ > 1) {
      MatMap<T> dcm(dcol.data(), kdim, hw);
      dcm.noalias() = wmat.transpose() * dymat;
      col2im_add(dcol.data(), in_, s.h, s.w, kernel_, dilation_, dx.sample(n));
    } else {
      MatMap<T> dxm(dx.sample(n), in_, hw);
      dxm.noalias() = wmat.transpose() * dymat;
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::params(std::vector<Param<T>*>& out) {
  out.push_back(&weight);
  if (has_bias_) out.push_back(&bias);
}

template <typename T>
void Conv2d<T>::state(std::vector<StateEntry<T>>& out) {
  out.push_back({weight.name, &weight.value});
  if (has_bias_) out.push_back({bias.name, &bias.value});
}

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::string name, int channels)
    : gamma(name + ".gamma", Shape{1, channels, 1, 1}),
      beta(name + ".beta", Shape{1, channels, 1, 1}),
      running_mean(Shape{1, channels, 1, 1}, T{0}),
      running_var(Shape{1, channels, 1, 1}, T{1}),
      name_(std::move(name)),
      channels_(channels) {
  gamma.value.fill(T{1});
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, bool training, bool record) {
  const Shape s = x.shape();
  if (s.c != channels_) fail(ErrorKind::Dimension, name_ + ": channel mismatch");
  Tensor<T> y(s);
  const std::size_t plane = s.plane();
  const double m = static_cast<double>(s.n) * static_cast<double>(plane);
  if (record) {
    xhat_ = Tensor<T>(s);
    inv_std_.assign(channels_, 0.0);
    cached_training_ = training;
  }
  for (int c = 0; c < channels_; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (training) {
      for (int n = 0; n < s.n; ++n) {
        const T* p = x.channel(n, c);
        for (std::size_t i = 0; i < plane; ++i) mean += p[i];
      }
      mean /= m;
      for (int n = 0; n < s.n; ++n) {
        const T* p = x.channel(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean;
          var += d * d;
        }
      }
      var /= m;
      const double unbiased = m > 1.0 ? var * m / (m - 1.0) : var;
      running_mean[c] = static_cast<T>((1.0 - kBatchNormMomentum) * running_mean[c] +
                                       kBatchNormMomentum * mean);
      running_var[c] = static_cast<T>((1.0 - kBatchNormMomentum) * running_var[c] +
                                      kBatchNormMomentum * unbiased);
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const double inv = 1.0 / std::sqrt(var + kBatchNormEps);
    const double g = gamma.value[c];
    const double b = beta.value[c];
    if (record) inv_std_[c] = inv;
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.channel(n, c);
      T* q = y.channel(n, c);
      T* h = record ? xhat_.channel(n, c) : nullptr;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (p[i] - mean) * inv;
        if (h) h[i] = static_cast<T>(xh);
        q[i] = static_cast<T>(g * xh + b);
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& dy) {
  const Shape s = dy.shape();
  if (!(s == xhat_.shape())) fail(ErrorKind::Dimension, name_ + ": backward without forward");
  Tensor<T> dx(s);
  const std::size_t plane = s.plane();
  const double m = static_cast<double>(s.n) * static_cast<double>(plane);
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* d = dy.channel(n, c);
      const T* h = xhat_.channel(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += d[i];
        sum_dy_xhat += static_cast<double>(d[i]) * h[i];
      }
    }
    gamma.grad[c] += static_cast<T>(sum_dy_xhat);
    beta.grad[c] += static_cast<T>(sum_dy);
    const double g = gamma.value[c];
    const double inv = inv_std_[c];
    for (int n = 0; n < s.n; ++n) {
      const T* d = dy.channel(n, c);
      const T* h = xhat_.channel(n, c);
      T* o = dx.channel(n, c);
      if (cached_training_) {
        const double mean_dy = sum_dy / m;
        const double mean_dy_xhat = sum_dy_xhat / m;
        for (std::size_t i = 0; i < plane; ++i) {
          o[i] = static_cast<T>(g * inv * (d[i] - mean_dy - h[i] * mean_dy_xhat));
        }
      } else {
        for (std::size_t i = 0; i < plane; ++i) o[i] = static_cast<T>(g * inv * d[i]);
      }
    }
  }
  return dx;
}

template <typename T>
void BatchNorm2d<T>::params(std::vector<Param<T>*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

template <typename T>
void BatchNorm2d<T>::state(std::vector<StateEntry<T>>& out) {
  out.push_back({gamma.name, &gamma.value});
  out.push_back({beta.name, &beta.value});
  out.push_back({name_ + ".running_mean", &running_mean});
  out.push_back({name_ + ".running_var", &running_var});
}

template <typename T>
void leaky_relu_inplace(Tensor<T>& x) {
  const T slope = static_cast<T>(kLeakySlope);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < T{0}) x[i] *= slope;
  }
}

template <typename T>
void leaky_relu_backward_inplace(const Tensor<T>& y, Tensor<T>& dy) {
  const T slope = static_cast<T>(kLeakySlope);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < T{0}) dy[i] *= slope;
  }
}

template <typename T>
void fill_normal(Tensor<T>& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(dist(rng));
}

template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template void leaky_relu_inplace(Tensor<float>&);
template void leaky_relu_inplace(Tensor<double>&);
template void leaky_relu_backward_inplace(const Tensor<float>&, Tensor<float>&);
template void leaky_relu_backward_inplace(const Tensor<double>&, Tensor<double>&);
template void fill_normal(Tensor<float>&, double, std::mt19937_64&);
template void fill_normal(Tensor<double>&, double, std::mt19937_64&);

}  // namespace pixelgame
