#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pixelgame/image.hpp"

namespace pixelgame {

enum class BackgroundKind { Sky, Cloud, Ground, Sea };

std::string_view to_string(BackgroundKind kind);
BackgroundKind parse_background(std::string_view name);

struct SceneParams {
  int image_size = 64;
  /// Probability of 1, 2, 3, ... targets.
  std::vector<double> target_count_pmf{0.80, 0.12, 0.05, 0.03};
  /// Areas are log-normal around `area_median`, clamped to the range.
  double area_min = 2.0;
  double area_max = 300.0;
  double area_median = 20.0;
  double area_log_sigma = 0.8;
  /// SCR values are log-normal around `scr_median`, clamped to the range.
  double scr_min = 1.0;
  double scr_max = 12.0;
  double scr_median = 3.6;
  double scr_log_sigma = 0.6;
  double clutter_strength = 1.0;
  /// Empty means: pick a background kind uniformly per scene.
  std::optional<BackgroundKind> background;

  void validate() const;
};

struct TargetMeta {
  double centroid_y = 0.0;
  double centroid_x = 0.0;
  int area = 0;
  double requested_scr = 0.0;
  double achieved_scr = 0.0;
};

struct SceneMeta {
  std::vector<TargetMeta> targets;
  BackgroundKind background = BackgroundKind::Sky;
  std::uint64_t clutter_seed = 0;
};

struct Scene {
  GrayImage image;
  BinaryMask mask;
  SceneMeta meta;
};

enum class Split { Train, Val, Test, All };

std::string_view to_string(Split split);

struct Sample {
  std::string stem;
  GrayImage image;
  BinaryMask mask;
  std::optional<SceneMeta> meta;
};

struct Dataset {
  std::vector<Sample> items;
  Split split = Split::All;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
};

/// Achieved SCR must land within this fraction of the requested SCR.
inline constexpr double kScrTolerance = 0.15;

/// Deterministic per seed. Throws Generation after bounded retries when the
/// requested contrast does not fit in the dynamic range.
Scene synth_scene(const SceneParams& params, std::uint64_t seed);

/// Scene i uses a seed derived from (seed, i).
Dataset synth_dataset(const SceneParams& params, int n, std::uint64_t seed,
                      Split split = Split::All);

/// Reads `key = value` lines into SceneParams; unknown keys are rejected.
SceneParams load_scene_params(const std::filesystem::path& path);

struct LoadOptions {
  /// When set and `root/splits/<name>.txt` exists, only those stems are loaded.
  std::optional<Split> split;
};

/// Layout: root/images/<stem>.png, root/masks/<stem>.png, optional meta.csv and
/// splits/{train,val,test}.txt. Warnings (empty directory, anti-aliased masks)
/// are appended to `warnings`.
Dataset load_dataset(const std::filesystem::path& root, const LoadOptions& options = {},
                     std::vector<std::string>* warnings = nullptr);

/// Writes the layout read by load_dataset, with meta.csv when metadata exists.
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

/// Seeded shuffle, then the first round(train_fraction * n) items form the
/// first split.
std::pair<Dataset, Dataset> resplit(const Dataset& dataset, double train_fraction,
                                    std::uint64_t seed);

struct AugmentConfig {
  int resize = 512;
  int crop = 480;
};

/// Bilinear image resize and nearest mask resize to resize x resize, then one
/// random crop window applied to both.
std::pair<GrayImage, BinaryMask> augment(const GrayImage& image, const BinaryMask& mask,
                                         const AugmentConfig& config, std::mt19937_64& rng);

GrayImage resize_bilinear(const GrayImage& image, int height, int width);
BinaryMask resize_nearest(const BinaryMask& mask, int height, int width);

/// 8-connected component labels (0 = background, 1..count).
struct Components {
  std::vector<int> labels;
  int count = 0;
  std::vector<int> areas;  // areas[k] is the size of component k + 1
};

Components connected_components(const BinaryMask& mask);

struct StatsReport {
  std::map<int, int> targets_per_image;  // target count -> images
  std::map<int, int> area_histogram;     // exact area (px) -> targets
  /// (area, fraction of targets with area <= area), one entry per distinct area.
  std::vector<std::pair<int, double>> cumulative_area;
  std::map<int, int> scr_histogram;      // floor(scr) -> targets
  int scr_undefined = 0;                 // components with a degenerate background
  std::vector<double> scr_values;        // every defined per-target SCR
  int images = 0;
  int targets = 0;

  double single_target_fraction() const;
  double fraction_area_below(int area) const;
  double fraction_scr_below(double scr) const;
};

StatsReport dataset_stats(const Dataset& dataset);

}  // namespace pixelgame
