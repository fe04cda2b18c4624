#include "pixelgame/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pixelgame {

void GameConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::Config, "learning_rate must be positive");
  }
  if (batch_size < 1) fail(ErrorKind::Config, "batch_size must be at least 1");
  if (epochs < 1) fail(ErrorKind::Config, "epochs must be at least 1");
  if (crop < 1 || resize < 1) fail(ErrorKind::Config, "crop and resize must be positive");
  if (crop > resize) fail(ErrorKind::Config, "crop must not exceed resize");
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorKind::Config, "threshold must lie in (0,1)");
  if (!(ss_lambda >= 0.0 && ss_lambda <= 1.0)) fail(ErrorKind::Config, "ss_lambda must lie in [0,1]");
  if (checkpoint_interval < 0) fail(ErrorKind::Config, "checkpoint_interval must be non-negative");
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Adam {
 public:
  explicit Adam(std::vector<Param<float>*> params) : params_(std::move(params)) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kAdamBeta1, t_);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Param<float>& p = *params_[k];
      float* m = m_[k].data();
      float* v = v_[k].data();
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m[i] = static_cast<float>(kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g);
        v[i] = static_cast<float>(kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g);
        const double mh = m[i] / c1;
        const double vh = v[i] / c2;
        p.value[i] = static_cast<float>(p.value[i] - lr * mh / (std::sqrt(vh) + kAdamEpsilon));
      }
    }
  }

 private:
  std::vector<Param<float>*> params_;
  std::vector<Tensor<float>> m_;
  std::vector<Tensor<float>> v_;
  int t_ = 0;
};

bool finite(const UtilityBundle& b) {
  return std::isfinite(b.u1) && std::isfinite(b.u2) && std::isfinite(b.g) &&
         std::isfinite(b.a1) && std::isfinite(b.a2) && std::isfinite(b.phi1) &&
         std::isfinite(b.phi2);
}

void accumulate(UtilityBundle& acc, const UtilityBundle& b, double w) {
  acc.u1 += w * b.u1;
  acc.u2 += w * b.u2;
  acc.g += w * b.g;
  acc.a1 += w * b.a1;
  acc.a2 += w * b.a2;
  acc.phi1 += w * b.phi1;
  acc.phi2 += w * b.phi2;
}

// Snapshot of every named tensor (weights and running statistics).
std::vector<Tensor<float>> snapshot(PlayerNetwork<float>& net) {
  std::vector<Tensor<float>> out;
  for (const auto& e : net.state()) out.push_back(*e.tensor);
  return out;
}

void restore(PlayerNetwork<float>& net, const std::vector<Tensor<float>>& saved) {
  auto st = net.state();
  for (std::size_t i = 0; i < st.size(); ++i) *st[i].tensor = saved[i];
}

struct BatchResult {
  UtilityBundle mean;
  Tensor<float> d1;
  Tensor<float> d2;
};

// Forward both players on one batch, evaluate the objectives image by image
// and assemble dObjective/dOutput for each player (mean over the batch).
BatchResult play_batch(TrainedGame& game, const Tensor<float>& images,
                       const std::vector<const BinaryMask*>& masks, bool record) {
  const GameConfig& cfg = game.config;
  const Tensor<float> o1 = game.player1.forward(images, true, record);
  const Tensor<float> o2 = game.player2.forward(images, true, record);
  const int n = images.shape().n;
  BatchResult r{UtilityBundle{}, Tensor<float>(o1.shape()), Tensor<float>(o2.shape())};
  const double w = 1.0 / n;
  for (int k = 0; k < n; ++k) {
    const ProbabilityMap p1 = probability_map(o1, k);
    const ProbabilityMap p2 = probability_map(o2, k);
    const BinaryMask& g = *masks[k];
    UtilityGradients grads;
    const bool need_grads = record && (cfg.loss_player1 == LossKind::Game ||
                                       cfg.loss_player2 == LossKind::Game);
    const UtilityBundle b = total_utility(p1, p2, g, cfg.utility_components, cfg.sharing,
                                          need_grads ? &grads : nullptr);
    accumulate(r.mean, b, w);
    if (!record) continue;

    float* d1 = r.d1.sample(k);
    float* d2 = r.d2.sample(k);
    if (cfg.loss_player1 == LossKind::Game) {
      for (std::size_t i = 0; i < g.size(); ++i) d1[i] = static_cast<float>(w * grads.phi1_o1[i]);
    } else {
      const LossSpec spec{cfg.loss_player1, cfg.ss_lambda};
      const double loss = combined_loss(spec, p1, g);
      if (!std::isfinite(loss)) r.mean.phi1 = loss;
      const auto dl = combined_loss_grad(spec, p1, g);
      for (std::size_t i = 0; i < g.size(); ++i) d1[i] = static_cast<float>(w * dl[i]);
    }
    if (cfg.loss_player2 == LossKind::Game) {
      for (std::size_t i = 0; i < g.size(); ++i) d2[i] = static_cast<float>(w * grads.phi2_o2[i]);
    } else {
      const LossSpec spec{cfg.loss_player2, cfg.ss_lambda};
      const double loss = combined_loss(spec, p2, g);
      if (!std::isfinite(loss)) r.mean.phi2 = loss;
      const auto dl = combined_loss_grad(spec, p2, g);
      for (std::size_t i = 0; i < g.size(); ++i) d2[i] = static_cast<float>(w * dl[i]);
    }
  }
  return r;
}

bool finite_grads(PlayerNetwork<float>& net) {
  for (auto* p : net.params()) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      if (!std::isfinite(p->grad[i])) return false;
    }
  }
  return true;
}

// Resized copies of a dataset's images and masks (no crop).
struct Resized {
  std::vector<GrayImage> images;
  std::vector<BinaryMask> masks;
};

Resized resize_all(const Dataset& ds, int edge) {
  Resized r;
  for (const auto& s : ds.items) {
    r.images.push_back(resize_bilinear(s.image, edge, edge));
    r.masks.push_back(resize_nearest(s.mask, edge, edge));
  }
  return r;
}

}  // namespace

TrainedGame::TrainedGame(const GameConfig& cfg)
    : player1(FdcnSpec::fdcn9(), cfg.use_mim, derive_seed(cfg.seed, 1)),
      player2(FdcnSpec::fdcn13(), cfg.use_mim, derive_seed(cfg.seed, 2)),
      config(cfg) {}

TrainedGame::TrainedGame(PlayerNetwork<float> p1, PlayerNetwork<float> p2, GameConfig cfg)
    : player1(std::move(p1)), player2(std::move(p2)), config(cfg) {}

ProbabilityMap fuse(const ProbabilityMap& o1, const ProbabilityMap& o2) {
  require_same_shape(o1, o2, "fuse");
  ProbabilityMap out(o1.height(), o1.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (o1[i] + o2[i]);
  return out;
}

bool equilibrium_reached(const TrainHistory& history, double window, double tol) {
  if (history.empty()) fail(ErrorKind::Config, "equilibrium_reached: empty history");
  if (!(window > 0.0 && window <= 1.0)) fail(ErrorKind::Config, "window must lie in (0,1]");
  if (!(tol > 0.0)) fail(ErrorKind::Config, "tol must be positive");
  const std::size_t n = history.size();
  std::size_t count = static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)));
  count = std::min(n, std::max<std::size_t>(2, count));
  const auto stable = [&](double UtilityBundle::*field) {
    double lo = history.epochs[n - count].utility.*field;
    double hi = lo;
    double sum = 0.0;
    for (std::size_t i = n - count; i < n; ++i) {
      const double v = history.epochs[i].utility.*field;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    const double mean = std::abs(sum / static_cast<double>(count));
    if (hi == lo) return true;
    return mean > 0.0 && (hi - lo) / mean < tol;
  };
  return stable(&UtilityBundle::phi1) && stable(&UtilityBundle::phi2);
}

EvaluationReport evaluate(TrainedGame& game, const Dataset& test_set) {
  if (test_set.empty()) fail(ErrorKind::Data, "evaluation set is empty");
  const GameConfig& cfg = game.config;
  const Resized data = resize_all(test_set, cfg.resize);
  std::vector<MetricReport> r1, r2, rf;
  const std::size_t total = data.images.size();
  for (std::size_t start = 0; start < total; start += cfg.batch_size) {
    const std::size_t end = std::min(total, start + static_cast<std::size_t>(cfg.batch_size));
    std::vector<const GrayImage*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&data.images[i]);
    const Tensor<float> x = to_batch<float>(batch);
    const Tensor<float> o1 = game.player1.forward(x, false, false);
    const Tensor<float> o2 = game.player2.forward(x, false, false);
    for (std::size_t i = start; i < end; ++i) {
      const int k = static_cast<int>(i - start);
      const ProbabilityMap p1 = probability_map(o1, k);
      const ProbabilityMap p2 = probability_map(o2, k);
      const BinaryMask& g = data.masks[i];
      r1.push_back(metrics(confusion_counts(binarize(p1, cfg.threshold), g)));
      r2.push_back(metrics(confusion_counts(binarize(p2, cfg.threshold), g)));
      rf.push_back(metrics(confusion_counts(binarize(fuse(p1, p2), cfg.threshold), g)));
    }
  }
  return {average(r1), average(r2), average(rf), static_cast<int>(total)};
}

UtilityBundle measure_utility(TrainedGame& game, const Dataset& dataset) {
  if (dataset.empty()) fail(ErrorKind::Data, "measure_utility: empty dataset");
  const GameConfig& cfg = game.config;
  const auto saved1 = snapshot(game.player1);
  const auto saved2 = snapshot(game.player2);
  const Resized data = resize_all(dataset, cfg.crop);
  UtilityBundle acc;
  const std::size_t total = data.images.size();
  for (std::size_t start = 0; start < total; start += cfg.batch_size) {
    const std::size_t end = std::min(total, start + static_cast<std::size_t>(cfg.batch_size));
    std::vector<const GrayImage*> imgs;
    std::vector<const BinaryMask*> masks;
    for (std::size_t i = start; i < end; ++i) {
      imgs.push_back(&data.images[i]);
      masks.push_back(&data.masks[i]);
    }
    const BatchResult r = play_batch(game, to_batch<float>(imgs), masks, false);
    accumulate(acc, r.mean, static_cast<double>(end - start) / static_cast<double>(total));
  }
  restore(game.player1, saved1);
  restore(game.player2, saved2);
  return acc;
}

TrainedGame train(const GameConfig& config, const Dataset& train_set, const Dataset& val_set,
                  const TrainCallbacks& callbacks) {
  config.validate();
  if (train_set.empty()) fail(ErrorKind::Data, "training set is empty");
  if (val_set.empty()) fail(ErrorKind::Data, "validation set is empty");
  for (const auto& s : train_set.items) {
    require_same_shape(s.image, s.mask, "train");
  }

  TrainedGame game(config);
  Adam opt1(game.player1.params());
  Adam opt2(game.player2.params());
  std::mt19937_64 rng(derive_seed(config.seed, 3));
  const AugmentConfig aug{config.resize, config.crop};

  std::vector<std::size_t> order(train_set.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    UtilityBundle epoch_mean;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<GrayImage> imgs;
      std::vector<BinaryMask> masks;
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = train_set.items[order[i]];
        auto [img, msk] = augment(s.image, s.mask, aug, rng);
        imgs.push_back(std::move(img));
        masks.push_back(std::move(msk));
      }
      std::vector<const GrayImage*> img_ptrs;
      std::vector<const BinaryMask*> mask_ptrs;
      for (std::size_t i = 0; i < imgs.size(); ++i) {
        img_ptrs.push_back(&imgs[i]);
        mask_ptrs.push_back(&masks[i]);
      }

      BatchResult r = play_batch(game, to_batch<float>(img_ptrs), mask_ptrs, true);
      if (!finite(r.mean)) throw DivergenceError(epoch, batch_index, "non-finite utility");
      game.player1.zero_grad();
      game.player2.zero_grad();
      game.player1.backward(r.d1);
      game.player2.backward(r.d2);
      if (!finite_grads(game.player1) || !finite_grads(game.player2)) {
        throw DivergenceError(epoch, batch_index, "non-finite gradient");
      }
      // Both gradients were taken at the same joint state; now both players move.
      opt1.step(config.learning_rate);
      opt2.step(config.learning_rate);
      accumulate(epoch_mean, r.mean,
                 static_cast<double>(end - start) / static_cast<double>(order.size()));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.utility = epoch_mean;
    const EvaluationReport ev = evaluate(game, val_set);
    rec.player1 = ev.player1;
    rec.player2 = ev.player2;
    rec.fused = ev.fused;
    game.history.epochs.push_back(rec);
    if (callbacks.on_epoch) callbacks.on_epoch(rec);
    if (callbacks.on_checkpoint && config.checkpoint_interval > 0 &&
        epoch % config.checkpoint_interval == 0 && epoch != config.epochs) {
      callbacks.on_checkpoint(game);
    }
  }
  return game;
}

}  // namespace pixelgame
