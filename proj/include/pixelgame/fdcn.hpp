#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pixelgame/image.hpp"
#include "pixelgame/layers.hpp"
#include "pixelgame/mim.hpp"

namespace pixelgame {

enum class Variant { Fdcn9, Fdcn13, Custom };

std::string_view to_string(Variant v);
/// Accepts "fdcn9" and "fdcn13"; anything else is a config error.
Variant parse_variant(std::string_view name);

/// One "conv-k3-d<dilation>-c<channels>" row.
struct LayerSpec {
  int kernel = 3;
  int dilation = 1;
  int out_channels = 0;
  bool normalized_activated = true;
};

/// Encoder layer whose output is added onto a decoder layer of equal dilation.
/// Indices are zero-based positions in FdcnSpec::layers.
struct SkipPair {
  int encoder = 0;
  int decoder = 0;
};

struct FdcnSpec {
  Variant variant = Variant::Custom;
  std::vector<LayerSpec> layers;
  int channels = 0;
  std::vector<SkipPair> skip_pairs;

  static FdcnSpec fdcn9();
  static FdcnSpec fdcn13();
  static FdcnSpec for_variant(Variant v);
  /// Palindromic dilation list with an odd number of layers (2n + 1).
  static FdcnSpec from_dilations(const std::vector<int>& dilations, int channels);

  std::vector<int> dilations() const;
  std::vector<int> encoder_dilations() const;
  std::vector<int> decoder_dilations() const;
};

/// 1 + 2 * sum(dilation) for 3x3 kernels; the head is 1x1 and adds nothing.
int receptive_field(const FdcnSpec& spec);

/// Trainable scalar count implied by a spec, without building the network.
std::size_t parameter_count(const FdcnSpec& spec, bool use_mim);

/// A player: fully dilated encoder-decoder, optional MIM on the skips, and a
/// 1x1 head with sigmoid output.
template <typename T>
class PlayerNetwork {
 public:
  PlayerNetwork(FdcnSpec spec, bool use_mim, std::uint64_t seed);

  const FdcnSpec& spec() const noexcept { return spec_; }
  bool use_mim() const noexcept { return use_mim_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// images: N x 1 x H x W. Returns probabilities N x 1 x H x W. With
  /// `record` the activations needed by backward() are kept. `features`, when
  /// given, receives each conv layer's activated output (before skip addition).
  Tensor<T> forward(const Tensor<T>& images, bool training, bool record,
                    std::vector<Tensor<T>>* features = nullptr);

  /// Accumulates parameter gradients for dL/dprob. Returns dL/dimages when
  /// requested.
  Tensor<T> backward(const Tensor<T>& d_prob, bool need_input_grad = false);

  std::vector<Param<T>*> params();
  std::vector<StateEntry<T>> state();
  void zero_grad();
  std::size_t parameter_count();

  std::vector<MimBlock<T>>& mim_blocks() noexcept { return mims_; }
  /// Index into mim_blocks() for an encoder layer, if it feeds a skip.
  std::optional<int> mim_index_for_encoder(int layer) const;

 private:
  const Tensor<T>& layer_input(int i) const;

  FdcnSpec spec_;
  bool use_mim_;
  std::uint64_t seed_;
  std::vector<Conv2d<T>> convs_;
  std::vector<BatchNorm2d<T>> norms_;
  std::vector<MimBlock<T>> mims_;
  Conv2d<T> head_;
  std::vector<int> skip_source_;  // per layer: encoder index feeding it, or -1
  std::vector<int> skip_slot_;    // per encoder layer: position in mims_, or -1

  Tensor<T> input_;
  std::vector<Tensor<T>> features_;
  std::vector<Tensor<T>> summed_;  // post-skip outputs for decoder targets
  Tensor<T> prob_;
};

template <typename T>
PlayerNetwork<T> build_fdcn(Variant variant, bool use_mim, std::uint64_t seed) {
  return PlayerNetwork<T>(FdcnSpec::for_variant(variant), use_mim, seed);
}

struct ForwardResult {
  ProbabilityMap prob;
  std::vector<FeatureMap> features;
};

/// Single-image inference (BN with running statistics).
template <typename T>
ForwardResult forward(PlayerNetwork<T>& net, const GrayImage& image, bool with_features = false);

/// Packs images into an N x 1 x H x W tensor; all images must share a shape.
template <typename T>
Tensor<T> to_batch(const std::vector<const GrayImage*>& images);

ProbabilityMap probability_map(const Tensor<float>& prob, int n);
ProbabilityMap probability_map(const Tensor<double>& prob, int n);

}  // namespace pixelgame
