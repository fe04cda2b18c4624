#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pixelgame/data.hpp"
#include "pixelgame/fdcn.hpp"
#include "pixelgame/metrics.hpp"
#include "pixelgame/utility.hpp"

namespace pixelgame {

struct GameConfig {
  double learning_rate = 1e-5;
  int batch_size = 8;
  int epochs = 70;
  int crop = 480;
  int resize = 512;
  double threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
  bool use_mim = true;
  /// Objective per player: LossKind::Game minimizes phi_k, the others replace
  /// it with a combined segmentation loss on that player's output.
  LossKind loss_player1 = LossKind::Game;
  LossKind loss_player2 = LossKind::Game;
  UtilityComponents utility_components = UtilityComponents::all();
  UtilitySharing sharing = UtilitySharing::PerPlayer;
  double ss_lambda = 0.5;
  /// Save a checkpoint every this many epochs (0 = only at the end).
  int checkpoint_interval = 0;

  void validate() const;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

struct EpochRecord {
  int epoch = 0;            // 1-based
  UtilityBundle utility;    // mean over the epoch's training images
  MetricReport player1;     // validation metrics
  MetricReport player2;
  MetricReport fused;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  std::size_t size() const noexcept { return epochs.size(); }
  bool empty() const noexcept { return epochs.empty(); }
  const EpochRecord& back() const { return epochs.back(); }
};

/// The FNs-player is an FDCN9, the FPs-player an FDCN13.
struct TrainedGame {
  PlayerNetwork<float> player1;
  PlayerNetwork<float> player2;
  GameConfig config;
  TrainHistory history;

  explicit TrainedGame(const GameConfig& cfg);
  TrainedGame(PlayerNetwork<float> p1, PlayerNetwork<float> p2, GameConfig cfg);
};

struct TrainCallbacks {
  std::function<void(const EpochRecord&)> on_epoch;
  /// Called after epochs that are multiples of checkpoint_interval.
  std::function<void(const TrainedGame&)> on_checkpoint;
};

/// Simultaneous Adam updates of both players on the same mini-batches.
/// Deterministic for a fixed config (data order, crops and weights all derive
/// from config.seed). Throws DivergenceError on non-finite objectives.
TrainedGame train(const GameConfig& config, const Dataset& train_set, const Dataset& val_set,
                  const TrainCallbacks& callbacks = {});

ProbabilityMap fuse(const ProbabilityMap& o1, const ProbabilityMap& o2);

/// True when, over the trailing `window` fraction of epochs (at least two
/// epochs when available), (max - min) / mean of phi1 and of phi2 are both
/// below `tol`.
bool equilibrium_reached(const TrainHistory& history, double window, double tol);

struct EvaluationReport {
  MetricReport player1;
  MetricReport player2;
  MetricReport fused;
  int images = 0;
};

/// Per-image metrics at config.threshold, averaged over the set. Images are
/// resized to config.resize (no crop); fusion precedes thresholding.
EvaluationReport evaluate(TrainedGame& game, const Dataset& test_set);

/// Mean utilities over `dataset` using batch statistics, as during training,
/// without changing any weights or running statistics.
UtilityBundle measure_utility(TrainedGame& game, const Dataset& dataset);

}  // namespace pixelgame
