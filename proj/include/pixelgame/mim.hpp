#pragma once

#include <random>
#include <string>
#include <vector>

#include "pixelgame/layers.hpp"

namespace pixelgame {

inline constexpr int kMimBottleneckRatio = 4;

/// Maximum information modulation on one skip connection.
///
///   y  = lrelu(BN(pw_spatial(x)))                      1 x H x W
///   v1 = reshape(x) * softmax_HW(y)                    C
///   v2 = sigmoid(max over H,W of x)                    C
///   m2 = softmax_C(pw_excite(lrelu(BN(pw_squeeze([v1; v2])))))
///   m3 = sigmoid(max over C of x)                      H x W
///   z  = m2 (.)_channel x + m3 (.)_spatial x
///
/// pw_squeeze maps 2C -> 2C / r channels with r = kMimBottleneckRatio.
template <typename T>
class MimBlock {
 public:
  MimBlock() = default;
  MimBlock(std::string name, int channels);

  int channels() const noexcept { return channels_; }
  int squeeze_channels() const noexcept { return squeeze_; }

  Tensor<T> forward(const Tensor<T>& x, bool training, bool record);
  /// `x` is the tensor given to the recorded forward pass.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dz);

  void params(std::vector<Param<T>*>& out);
  void state(std::vector<StateEntry<T>>& out);
  void init(std::mt19937_64& rng, double stddev);

  /// Gates from the most recent recorded forward pass (N x C x 1 x 1 and N x 1 x H x W).
  const Tensor<T>& last_m2() const noexcept { return m2_; }
  const Tensor<T>& last_m3() const noexcept { return m3_; }

  Conv2d<T> pw_spatial;
  BatchNorm2d<T> bn_spatial;
  Conv2d<T> pw_squeeze;
  BatchNorm2d<T> bn_squeeze;
  Conv2d<T> pw_excite;

  // Stage functions shared by the block and the per-op API below.
  Tensor<T> spatial_logits(const Tensor<T>& x, bool training, bool record);
  Tensor<T> gate_from_descriptor(const Tensor<T>& m1, bool training, bool record);

 private:
  std::string name_;
  int channels_ = 0;
  int squeeze_ = 0;

  // Cached intermediates.
  Tensor<T> y_;       // spatial logits after activation
  Tensor<T> soft_;    // softmax over HW
  Tensor<T> v2_;
  std::vector<int> gmp_arg_;   // per (n, c) flat spatial index
  Tensor<T> m1_;
  Tensor<T> q_;       // squeeze output after activation
  Tensor<T> m2_;
  Tensor<T> m3_;
  std::vector<int> cmax_arg_;  // per (n, p) channel index
};

using MIMParams = MimBlock<double>;
/// C x H x W feature tensor, stored with n = 1.
using FeatureMap = Tensor<double>;

/// Per-op view of the block for a single feature map. Batch normalization
/// runs with running statistics, so each op is a pure function of (x, p).
std::vector<double> spatial_channel_attention(const FeatureMap& x, MIMParams& p);
std::vector<double> gmp_attention(const FeatureMap& x);
std::vector<double> channel_gate(const std::vector<double>& v1, const std::vector<double>& v2,
                                 MIMParams& p);
/// H * W values, row-major.
std::vector<double> spatial_gate(const FeatureMap& x);
FeatureMap mim_forward(const FeatureMap& x, MIMParams& p);

}  // namespace pixelgame
