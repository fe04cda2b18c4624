#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pixelgame/data.hpp"
#include "pixelgame/game.hpp"

namespace pixelgame {

using Entries = std::vector<std::pair<std::string, std::string>>;

/// Every GameConfig field as canonical `key, value` text, in a fixed order.
Entries game_config_entries(const GameConfig& config);
/// Sets one GameConfig field; false when `key` is not a GameConfig key.
bool apply_game_config_entry(GameConfig& config, const std::string& key, const std::string& value);

struct ConfigKeyDoc {
  std::string key;
  std::string default_value;
  std::string help;
};

/// A training run: GameConfig plus data sources and the output directory.
///
/// Data sources are directories in the load_dataset layout or `synth:N` for
/// N generated scenes (seeded by `seed`).
struct RunConfig {
  GameConfig game;
  std::string train_data = "synth:200";
  /// Empty: use `<train_data>/splits/val.txt` when present, otherwise hold
  /// out 1 - train_fraction of the training source.
  std::string val_data;
  double train_fraction = 0.8;
  /// Optional key = value file with SceneParams for synth sources.
  std::string scene_params;
  std::string out_dir = "runs/pixelgame";
  std::string device = "cpu";

  /// Unknown keys are config errors naming the key.
  void set(const std::string& key, const std::string& value);
  Entries entries() const;
  void validate() const;

  static RunConfig load(const std::filesystem::path& path);
  static const std::vector<ConfigKeyDoc>& documented_keys();
};

/// The output root: PIXELGAME_OUT when set, otherwise config.out_dir.
std::filesystem::path resolve_out_dir(const RunConfig& config);

SceneParams scene_params_for(const RunConfig& config);

/// Loads a directory or generates `synth:N`.
Dataset resolve_dataset(const std::string& source, std::uint64_t seed, const SceneParams& params,
                        std::optional<Split> split, std::vector<std::string>* warnings);

struct PreparedData {
  Dataset train;
  Dataset val;
  std::vector<std::string> warnings;
};

PreparedData prepare_training_data(const RunConfig& config);

}  // namespace pixelgame
