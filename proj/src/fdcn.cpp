#include "pixelgame/fdcn.hpp"

#include <algorithm>
#include <cmath>

namespace pixelgame {

namespace {

constexpr double kInitNoise = 1e-2;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Fdcn9: return "fdcn9";
    case Variant::Fdcn13: return "fdcn13";
    case Variant::Custom: return "custom";
  }
  return "custom";
}

Variant parse_variant(std::string_view name) {
  if (name == "fdcn9") return Variant::Fdcn9;
  if (name == "fdcn13") return Variant::Fdcn13;
  fail(ErrorKind::Config, "unknown network variant '" + std::string(name) + "'");
}

FdcnSpec FdcnSpec::from_dilations(const std::vector<int>& dilations, int channels) {
  const int count = static_cast<int>(dilations.size());
  if (count < 1 || count % 2 == 0) {
    fail(ErrorKind::Config, "an FDCN needs an odd number of layers");
  }
  if (channels < 1) fail(ErrorKind::Config, "an FDCN needs at least one channel");
  for (int i = 0; i < count; ++i) {
    if (!is_power_of_two(dilations[i])) {
      fail(ErrorKind::Config, "dilations must be powers of two");
    }
    if (dilations[i] != dilations[count - 1 - i]) {
      fail(ErrorKind::Config, "dilation sequence must be palindromic");
    }
  }
  FdcnSpec spec;
  spec.channels = channels;
  for (int d : dilations) spec.layers.push_back(LayerSpec{3, d, channels, true});
  const int n = (count - 1) / 2;
  for (int k = 2; k <= n; ++k) spec.skip_pairs.push_back(SkipPair{k - 1, count - k});
  return spec;
}

FdcnSpec FdcnSpec::fdcn9() {
  FdcnSpec s = from_dilations({1, 2, 4, 8, 16, 8, 4, 2, 1}, 128);
  s.variant = Variant::Fdcn9;
  return s;
}

FdcnSpec FdcnSpec::fdcn13() {
  FdcnSpec s = from_dilations({1, 2, 4, 8, 16, 32, 64, 32, 16, 8, 4, 2, 1}, 64);
  s.variant = Variant::Fdcn13;
  return s;
}

FdcnSpec FdcnSpec::for_variant(Variant v) {
  switch (v) {
    case Variant::Fdcn9: return fdcn9();
    case Variant::Fdcn13: return fdcn13();
    case Variant::Custom: break;
  }
  fail(ErrorKind::Config, "custom variants must be built from an explicit dilation list");
}

std::vector<int> FdcnSpec::dilations() const {
  std::vector<int> out;
  for (const auto& l : layers) out.push_back(l.dilation);
  return out;
}

std::vector<int> FdcnSpec::encoder_dilations() const {
  const auto all = dilations();
  return {all.begin(), all.begin() + static_cast<long>(all.size() / 2 + 1)};
}

std::vector<int> FdcnSpec::decoder_dilations() const {
  const auto all = dilations();
  return {all.begin() + static_cast<long>(all.size() / 2), all.end()};
}

int receptive_field(const FdcnSpec& spec) {
  int rf = 1;
  for (const auto& l : spec.layers) rf += l.dilation * (l.kernel - 1);
  return rf;
}

std::size_t parameter_count(const FdcnSpec& spec, bool use_mim) {
  const std::size_t c = static_cast<std::size_t>(spec.channels);
  std::size_t total = 0;
  std::size_t in = 1;
  for (const auto& l : spec.layers) {
    total += in * l.kernel * l.kernel * c;  // conv weights, no bias ahead of BN
    total += 2 * c;                         // BN affine
    in = c;
  }
  total += c + 1;  // head
  if (use_mim) {
    const std::size_t s = std::max<std::size_t>(1, 2 * c / kMimBottleneckRatio);
    const std::size_t per_skip = (c + 2) + (2 * c * s + 2 * s) + (s * c + c);
    total += per_skip * spec.skip_pairs.size();
  }
  return total;
}

template <typename T>
PlayerNetwork<T>::PlayerNetwork(FdcnSpec spec, bool use_mim, std::uint64_t seed)
    : spec_(std::move(spec)), use_mim_(use_mim), seed_(seed) {
  const int count = static_cast<int>(spec_.layers.size());
  if (count == 0) fail(ErrorKind::Config, "empty network spec");
  const int c = spec_.channels;
  std::mt19937_64 rng(seed);

  int in = 1;
  for (int i = 0; i < count; ++i) {
    const auto& l = spec_.layers[i];
    const std::string name = "layer" + std::to_string(i);
    convs_.emplace_back(name + ".conv", in, l.out_channels, l.kernel, l.dilation, false);
    norms_.emplace_back(name + ".bn", l.out_channels);
    auto& w = convs_.back().weight.value;
    fill_normal(w, kInitNoise, rng);
    if (i > 0) {
      // Identity through the center tap on the channel diagonal.
      const int center = (l.kernel / 2) * l.kernel + l.kernel / 2;
      const int taps = l.kernel * l.kernel;
      for (int k = 0; k < std::min(in, l.out_channels); ++k) {
        w[(static_cast<std::size_t>(k) * in + k) * taps + center] += T{1};
      }
    }
    in = l.out_channels;
  }
  head_ = Conv2d<T>("head", c, 1, 1, 1, true);
  fill_normal(head_.weight.value, kInitNoise, rng);

  skip_source_.assign(count, -1);
  skip_slot_.assign(count, -1);
  for (const auto& pair : spec_.skip_pairs) {
    skip_source_[pair.decoder] = pair.encoder;
    if (use_mim_) {
      skip_slot_[pair.encoder] = static_cast<int>(mims_.size());
      mims_.emplace_back("mim" + std::to_string(pair.encoder), spec_.layers[pair.encoder].out_channels);
      mims_.back().init(rng, kInitNoise);
    }
  }
}

template <typename T>
std::optional<int> PlayerNetwork<T>::mim_index_for_encoder(int layer) const {
  if (layer < 0 || layer >= static_cast<int>(skip_slot_.size()) || skip_slot_[layer] < 0) {
    return std::nullopt;
  }
  return skip_slot_[layer];
}

template <typename T>
const Tensor<T>& PlayerNetwork<T>::layer_input(int i) const {
  if (i == 0) return input_;
  return skip_source_[i - 1] >= 0 ? summed_[i - 1] : features_[i - 1];
}

template <typename T>
Tensor<T> PlayerNetwork<T>::forward(const Tensor<T>& images, bool training, bool record,
                                    std::vector<Tensor<T>>* features) {
  if (images.shape().c != 1) fail(ErrorKind::Dimension, "player input must be single-channel");
  const int count = static_cast<int>(convs_.size());
  std::vector<Tensor<T>> feats(count);
  std::vector<Tensor<T>> summed(count);

  for (int i = 0; i < count; ++i) {
    const Tensor<T>& in = i == 0 ? images : (skip_source_[i - 1] >= 0 ? summed[i - 1] : feats[i - 1]);
    Tensor<T> f = norms_[i].forward(convs_[i].forward(in), training, record);
    leaky_relu_inplace(f);
    if (const int src = skip_source_[i]; src >= 0) {
      Tensor<T> s = f;
      if (use_mim_) {
        s += mims_[skip_slot_[src]].forward(feats[src], training, record);
      } else {
        s += feats[src];
      }
      summed[i] = std::move(s);
    }
    feats[i] = std::move(f);
  }

  const Tensor<T>& last = skip_source_[count - 1] >= 0 ? summed[count - 1] : feats[count - 1];
  Tensor<T> prob = head_.forward(last);
  for (std::size_t i = 0; i < prob.size(); ++i) {
    prob[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(prob[i]))));
  }

  if (features) *features = feats;
  if (record) {
    input_ = images;
    features_ = std::move(feats);
    summed_ = std::move(summed);
    prob_ = prob;
  }
  return prob;
}

template <typename T>
Tensor<T> PlayerNetwork<T>::backward(const Tensor<T>& d_prob, bool need_input_grad) {
  if (!(d_prob.shape() == prob_.shape())) {
    fail(ErrorKind::Dimension, "backward: gradient shape " + to_string(d_prob.shape()) +
                                   " does not match the recorded output " + to_string(prob_.shape()));
  }
  const int count = static_cast<int>(convs_.size());
  Tensor<T> d_logit(d_prob.shape());
  for (std::size_t i = 0; i < d_prob.size(); ++i) {
    const double p = prob_[i];
    d_logit[i] = static_cast<T>(d_prob[i] * p * (1.0 - p));
  }
  Tensor<T> d = head_.backward(layer_input(count), d_logit, true);

  std::vector<Tensor<T>> pending(count);
  for (int i = count - 1; i >= 0; --i) {
    if (const int src = skip_source_[i]; src >= 0) {
      Tensor<T> ds = use_mim_ ? mims_[skip_slot_[src]].backward(features_[src], d) : d;
      if (pending[src].empty()) pending[src] = std::move(ds);
      else pending[src] += ds;
    }
    if (!pending[i].empty()) d += pending[i];
    leaky_relu_backward_inplace(features_[i], d);
    d = convs_[i].backward(layer_input(i), norms_[i].backward(d), i > 0 || need_input_grad);
  }
  return d;
}

template <typename T>
std::vector<Param<T>*> PlayerNetwork<T>::params() {
  std::vector<Param<T>*> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].params(out);
    norms_[i].params(out);
  }
  head_.params(out);
  for (auto& m : mims_) m.params(out);
  return out;
}

template <typename T>
std::vector<StateEntry<T>> PlayerNetwork<T>::state() {
  std::vector<StateEntry<T>> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].state(out);
    norms_[i].state(out);
  }
  head_.state(out);
  for (auto& m : mims_) m.state(out);
  return out;
}

template <typename T>
void PlayerNetwork<T>::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

template <typename T>
std::size_t PlayerNetwork<T>::parameter_count() {
  std::size_t total = 0;
  for (auto* p : params()) total += p->value.size();
  return total;
}

template class PlayerNetwork<float>;
template class PlayerNetwork<double>;

template <typename T>
Tensor<T> to_batch(const std::vector<const GrayImage*>& images) {
  if (images.empty()) fail(ErrorKind::Data, "empty batch");
  const int h = images.front()->height();
  const int w = images.front()->width();
  Tensor<T> batch(Shape{static_cast<int>(images.size()), 1, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const GrayImage& img = *images[n];
    if (img.height() != h || img.width() != w) {
      fail(ErrorKind::Dimension, "batch images must share one shape");
    }
    T* dst = batch.sample(static_cast<int>(n));
    for (std::size_t i = 0; i < img.size(); ++i) dst[i] = static_cast<T>(img[i]);
  }
  return batch;
}

template Tensor<float> to_batch(const std::vector<const GrayImage*>&);
template Tensor<double> to_batch(const std::vector<const GrayImage*>&);

namespace {

template <typename T>
ProbabilityMap to_map(const Tensor<T>& prob, int n) {
  const Shape s = prob.shape();
  ProbabilityMap map(s.h, s.w);
  const T* src = prob.sample(n);
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<double>(src[i]);
  return map;
}

}  // namespace

ProbabilityMap probability_map(const Tensor<float>& prob, int n) { return to_map(prob, n); }
ProbabilityMap probability_map(const Tensor<double>& prob, int n) { return to_map(prob, n); }

template <typename T>
ForwardResult forward(PlayerNetwork<T>& net, const GrayImage& image, bool with_features) {
  const Tensor<T> batch = to_batch<T>({&image});
  std::vector<Tensor<T>> feats;
  const Tensor<T> prob = net.forward(batch, false, false, with_features ? &feats : nullptr);
  ForwardResult result{to_map(prob, 0), {}};
  for (const auto& f : feats) result.features.push_back(f.template cast<double>());
  return result;
}

template ForwardResult forward(PlayerNetwork<float>&, const GrayImage&, bool);
template ForwardResult forward(PlayerNetwork<double>&, const GrayImage&, bool);

}  // namespace pixelgame
