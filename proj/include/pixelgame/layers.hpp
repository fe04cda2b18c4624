#pragma once

#include <random>
#include <string>
#include <vector>

#include "pixelgame/tensor.hpp"

namespace pixelgame {

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// A named tensor exposed for checkpointing (parameters and running buffers).
template <typename T>
struct StateEntry {
  std::string name;
  Tensor<T>* tensor;
};

/// Square-kernel convolution with zero padding equal to the dilation, so the
/// spatial size is preserved. Weights are laid out out x (in * k * k).
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int dilation, bool bias);

  Tensor<T> forward(const Tensor<T>& x) const;
  /// Accumulates weight (and bias) gradients. `x` is the tensor passed to
  /// forward. Returns dL/dx when requested, else an empty tensor.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool need_input_grad);

  void params(std::vector<Param<T>*>& out);
  void state(std::vector<StateEntry<T>>& out);

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }
  int kernel() const noexcept { return kernel_; }
  int dilation() const noexcept { return dilation_; }
  bool has_bias() const noexcept { return has_bias_; }

  Param<T> weight;
  Param<T> bias;

 private:
  int in_ = 0;
  int out_ = 0;
  int kernel_ = 1;
  int dilation_ = 1;
  bool has_bias_ = false;
};

/// Per-channel batch normalization. Training mode normalizes with batch
/// statistics over (N, H, W) and updates the running estimates.
template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels);

  Tensor<T> forward(const Tensor<T>& x, bool training, bool record);
  Tensor<T> backward(const Tensor<T>& dy);

  void params(std::vector<Param<T>*>& out);
  void state(std::vector<StateEntry<T>>& out);

  int channels() const noexcept { return channels_; }

  Param<T> gamma;
  Param<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;

 private:
  std::string name_;
  int channels_ = 0;
  bool cached_training_ = false;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
};

template <typename T>
void leaky_relu_inplace(Tensor<T>& x);

/// `y` is the activation output; its sign equals the input's sign.
template <typename T>
void leaky_relu_backward_inplace(const Tensor<T>& y, Tensor<T>& dy);

template <typename T>
void fill_normal(Tensor<T>& t, double stddev, std::mt19937_64& rng);

}  // namespace pixelgame
