#include "pixelgame/mim.hpp"

#include <algorithm>
#include <cmath>

namespace pixelgame {

namespace {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

template <typename T>
void softmax_inplace(T* v, std::size_t count) {
  double peak = v[0];
  for (std::size_t i = 1; i < count; ++i) peak = std::max<double>(peak, v[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double e = std::exp(static_cast<double>(v[i]) - peak);
    v[i] = static_cast<T>(e);
    total += e;
  }
  for (std::size_t i = 0; i < count; ++i) v[i] = static_cast<T>(v[i] / total);
}

}  // namespace

template <typename T>
MimBlock<T>::MimBlock(std::string name, int channels)
    : pw_spatial(name + ".pw_spatial", channels, 1, 1, 1, false),
      bn_spatial(name + ".bn_spatial", 1),
      pw_squeeze(name + ".pw_squeeze", 2 * channels,
                 std::max(1, 2 * channels / kMimBottleneckRatio), 1, 1, false),
      bn_squeeze(name + ".bn_squeeze", std::max(1, 2 * channels / kMimBottleneckRatio)),
      pw_excite(name + ".pw_excite", std::max(1, 2 * channels / kMimBottleneckRatio), channels,
                1, 1, true),
      name_(std::move(name)),
      channels_(channels),
      squeeze_(std::max(1, 2 * channels / kMimBottleneckRatio)) {}

template <typename T>
void MimBlock<T>::init(std::mt19937_64& rng, double stddev) {
  fill_normal(pw_spatial.weight.value, stddev, rng);
  fill_normal(pw_squeeze.weight.value, stddev, rng);
  fill_normal(pw_excite.weight.value, stddev, rng);
  pw_excite.bias.value.fill(T{0});
}

template <typename T>
Tensor<T> MimBlock<T>::spatial_logits(const Tensor<T>& x, bool training, bool record) {
  Tensor<T> y = bn_spatial.forward(pw_spatial.forward(x), training, record);
  leaky_relu_inplace(y);
  if (record) y_ = y;
  return y;
}

template <typename T>
Tensor<T> MimBlock<T>::gate_from_descriptor(const Tensor<T>& m1, bool training, bool record) {
  Tensor<T> q = bn_squeeze.forward(pw_squeeze.forward(m1), training, record);
  leaky_relu_inplace(q);
  Tensor<T> e = pw_excite.forward(q);
  for (int n = 0; n < e.shape().n; ++n) softmax_inplace(e.sample(n), channels_);
  if (record) {
    m1_ = m1;
    q_ = std::move(q);
  }
  return e;
}

template <typename T>
Tensor<T> MimBlock<T>::forward(const Tensor<T>& x, bool training, bool record) {
  const Shape s = x.shape();
  if (s.c != channels_) fail(ErrorKind::Dimension, name_ + ": channel mismatch");
  const int C = s.c;
  const std::size_t P = s.plane();

  Tensor<T> soft = spatial_logits(x, training, record);
  for (int n = 0; n < s.n; ++n) softmax_inplace(soft.sample(n), P);

  Tensor<T> m1(Shape{s.n, 2 * C, 1, 1});
  Tensor<T> v2(Shape{s.n, C, 1, 1});
  std::vector<int> gmp_arg(static_cast<std::size_t>(s.n) * C);
  for (int n = 0; n < s.n; ++n) {
    const T* sw = soft.sample(n);
    for (int c = 0; c < C; ++c) {
      const T* xc = x.channel(n, c);
      double acc = 0.0;
      int arg = 0;
      for (std::size_t p = 0; p < P; ++p) {
        acc += static_cast<double>(xc[p]) * sw[p];
        if (xc[p] > xc[arg]) arg = static_cast<int>(p);
      }
      m1.sample(n)[c] = static_cast<T>(acc);
      const T gate = static_cast<T>(sigmoid(xc[arg]));
      v2.sample(n)[c] = gate;
      m1.sample(n)[C + c] = gate;
      gmp_arg[static_cast<std::size_t>(n) * C + c] = arg;
    }
  }

  Tensor<T> m2 = gate_from_descriptor(m1, training, record);

  Tensor<T> m3(Shape{s.n, 1, s.h, s.w});
  std::vector<int> cmax_arg(static_cast<std::size_t>(s.n) * P);
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t p = 0; p < P; ++p) {
      int arg = 0;
      T best = x.channel(n, 0)[p];
      for (int c = 1; c < C; ++c) {
        const T v = x.channel(n, c)[p];
        if (v > best) {
          best = v;
          arg = c;
        }
      }
      m3.sample(n)[p] = static_cast<T>(sigmoid(best));
      cmax_arg[static_cast<std::size_t>(n) * P + p] = arg;
    }
  }

  Tensor<T> z(s);
  for (int n = 0; n < s.n; ++n) {
    const T* g3 = m3.sample(n);
    for (int c = 0; c < C; ++c) {
      const T g2 = m2.sample(n)[c];
      const T* xc = x.channel(n, c);
      T* zc = z.channel(n, c);
      for (std::size_t p = 0; p < P; ++p) zc[p] = (g2 + g3[p]) * xc[p];
    }
  }

  if (record) {
    soft_ = std::move(soft);
    v2_ = std::move(v2);
    gmp_arg_ = std::move(gmp_arg);
    cmax_arg_ = std::move(cmax_arg);
    m2_ = std::move(m2);
    m3_ = std::move(m3);
  }
  return z;
}

template <typename T>
Tensor<T> MimBlock<T>::backward(const Tensor<T>& x, const Tensor<T>& dz) {
  const Shape s = x.shape();
  if (!(soft_.shape() == Shape{s.n, 1, s.h, s.w})) {
    fail(ErrorKind::Dimension, name_ + ": backward without recorded forward");
  }
  const int C = s.c;
  const std::size_t P = s.plane();
  Tensor<T> dx(s);
  Tensor<T> de(Shape{s.n, C, 1, 1});

  for (int n = 0; n < s.n; ++n) {
    const T* g3 = m3_.sample(n);
    const T* g2 = m2_.sample(n);
    std::vector<double> dm3(P, 0.0);
    std::vector<double> dm2(C, 0.0);
    for (int c = 0; c < C; ++c) {
      const T* xc = x.channel(n, c);
      const T* dzc = dz.channel(n, c);
      T* dxc = dx.channel(n, c);
      double acc = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        dxc[p] = (g2[c] + g3[p]) * dzc[p];
        const double prod = static_cast<double>(dzc[p]) * xc[p];
        acc += prod;
        dm3[p] += prod;
      }
      dm2[c] = acc;
    }
    // Spatial gate: gradient reaches only the channel holding the maximum.
    for (std::size_t p = 0; p < P; ++p) {
      const double g = g3[p];
      const int c = cmax_arg_[static_cast<std::size_t>(n) * P + p];
      dx.channel(n, c)[p] += static_cast<T>(dm3[p] * g * (1.0 - g));
    }
    double dot = 0.0;
    for (int c = 0; c < C; ++c) dot += dm2[c] * g2[c];
    for (int c = 0; c < C; ++c) de.sample(n)[c] = static_cast<T>(g2[c] * (dm2[c] - dot));
  }

  Tensor<T> dq = pw_excite.backward(q_, de, true);
  leaky_relu_backward_inplace(q_, dq);
  Tensor<T> dm1 = pw_squeeze.backward(m1_, bn_squeeze.backward(dq), true);

  Tensor<T> dy(Shape{s.n, 1, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    const T* dv = dm1.sample(n);
    const T* sw = soft_.sample(n);
    std::vector<double> ds(P, 0.0);
    for (int c = 0; c < C; ++c) {
      const T* xc = x.channel(n, c);
      T* dxc = dx.channel(n, c);
      const double dv1 = dv[c];
      for (std::size_t p = 0; p < P; ++p) {
        dxc[p] += static_cast<T>(dv1 * sw[p]);
        ds[p] += dv1 * xc[p];
      }
      const double g = v2_.sample(n)[c];
      dxc[gmp_arg_[static_cast<std::size_t>(n) * C + c]] +=
          static_cast<T>(dv[C + c] * g * (1.0 - g));
    }
    double dot = 0.0;
    for (std::size_t p = 0; p < P; ++p) dot += ds[p] * sw[p];
    T* dyn = dy.sample(n);
    for (std::size_t p = 0; p < P; ++p) dyn[p] = static_cast<T>(sw[p] * (ds[p] - dot));
  }
  leaky_relu_backward_inplace(y_, dy);
  dx += pw_spatial.backward(x, bn_spatial.backward(dy), true);
  return dx;
}

template <typename T>
void MimBlock<T>::params(std::vector<Param<T>*>& out) {
  pw_spatial.params(out);
  bn_spatial.params(out);
  pw_squeeze.params(out);
  bn_squeeze.params(out);
  pw_excite.params(out);
}

template <typename T>
void MimBlock<T>::state(std::vector<StateEntry<T>>& out) {
  pw_spatial.state(out);
  bn_spatial.state(out);
  pw_squeeze.state(out);
  bn_squeeze.state(out);
  pw_excite.state(out);
}

template class MimBlock<float>;
template class MimBlock<double>;

namespace {

void require_single(const FeatureMap& x) {
  if (x.shape().n != 1 || x.shape().c < 1) {
    fail(ErrorKind::Dimension, "feature map must be a single C x H x W tensor");
  }
}

}  // namespace

std::vector<double> spatial_channel_attention(const FeatureMap& x, MIMParams& p) {
  require_single(x);
  Tensor<double> soft = p.spatial_logits(x, false, false);
  softmax_inplace(soft.data(), soft.size());
  std::vector<double> v1(x.shape().c, 0.0);
  for (int c = 0; c < x.shape().c; ++c) {
    const double* xc = x.channel(0, c);
    for (std::size_t i = 0; i < soft.size(); ++i) v1[c] += xc[i] * soft[i];
  }
  return v1;
}

std::vector<double> gmp_attention(const FeatureMap& x) {
  require_single(x);
  std::vector<double> v2(x.shape().c);
  for (int c = 0; c < x.shape().c; ++c) {
    const double* xc = x.channel(0, c);
    v2[c] = sigmoid(*std::max_element(xc, xc + x.shape().plane()));
  }
  return v2;
}

std::vector<double> channel_gate(const std::vector<double>& v1, const std::vector<double>& v2,
                                 MIMParams& p) {
  const int C = p.channels();
  if (static_cast<int>(v1.size()) != C || static_cast<int>(v2.size()) != C) {
    fail(ErrorKind::Dimension, "channel_gate: descriptor length does not match channels");
  }
  Tensor<double> m1(Shape{1, 2 * C, 1, 1});
  std::copy(v1.begin(), v1.end(), m1.data());
  std::copy(v2.begin(), v2.end(), m1.data() + C);
  Tensor<double> m2 = p.gate_from_descriptor(m1, false, false);
  return {m2.data(), m2.data() + C};
}

std::vector<double> spatial_gate(const FeatureMap& x) {
  require_single(x);
  const std::size_t P = x.shape().plane();
  std::vector<double> m3(P);
  for (std::size_t i = 0; i < P; ++i) {
    double best = x.channel(0, 0)[i];
    for (int c = 1; c < x.shape().c; ++c) best = std::max(best, x.channel(0, c)[i]);
    m3[i] = sigmoid(best);
  }
  return m3;
}

FeatureMap mim_forward(const FeatureMap& x, MIMParams& p) {
  require_single(x);
  return p.forward(x, false, false);
}

}  // namespace pixelgame
