#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pixelgame/config.hpp"
#include "pixelgame/data.hpp"
#include "pixelgame/scr.hpp"

namespace pixelgame {

std::string_view to_string(BackgroundKind kind) {
  switch (kind) {
    case BackgroundKind::Sky: return "sky";
    case BackgroundKind::Cloud: return "cloud";
    case BackgroundKind::Ground: return "ground";
    case BackgroundKind::Sea: return "sea";
  }
  return "sky";
}

BackgroundKind parse_background(std::string_view name) {
  if (name == "sky") return BackgroundKind::Sky;
  if (name == "cloud") return BackgroundKind::Cloud;
  if (name == "ground") return BackgroundKind::Ground;
  if (name == "sea") return BackgroundKind::Sea;
  fail(ErrorKind::Config, "unknown background kind '" + std::string(name) + "'");
}

void SceneParams::validate() const {
  if (image_size < 16) fail(ErrorKind::Config, "image_size must be at least 16");
  if (target_count_pmf.empty()) fail(ErrorKind::Config, "target_count_pmf is empty");
  double total = 0.0;
  for (double p : target_count_pmf) {
    if (p < 0.0) fail(ErrorKind::Config, "target_count_pmf has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::Config, "target_count_pmf must sum to 1");
  if (!(area_min >= 1.0 && area_max >= area_min && area_median > 0.0 && area_log_sigma >= 0.0)) {
    fail(ErrorKind::Config, "invalid target area range");
  }
  if (!(scr_min > 0.0 && scr_max >= scr_min && scr_median > 0.0 && scr_log_sigma >= 0.0)) {
    fail(ErrorKind::Config, "scr range must be positive");
  }
  if (clutter_strength < 0.0) fail(ErrorKind::Config, "clutter_strength must be non-negative");
}

namespace {

constexpr int kMaxSceneAttempts = 64;
constexpr int kMaxPlacementAttempts = 200;
constexpr double kClutterSigma = 0.02;
// Mask boundary sits at this many standard deviations of the blob profile.
constexpr double kBlobEdgeSigmas = 1.2;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Coarse Gaussian lattice upsampled bilinearly to size x size.
std::vector<double> smooth_field(int size, int cells, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int g = cells + 1;
  std::vector<double> lattice(static_cast<std::size_t>(g) * g);
  for (double& v : lattice) v = normal(rng);
  std::vector<double> field(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    const double fy = (y + 0.5) / size * cells;
    const int y0 = std::min(static_cast<int>(fy), cells - 1);
    const double ty = fy - y0;
    for (int x = 0; x < size; ++x) {
      const double fx = (x + 0.5) / size * cells;
      const int x0 = std::min(static_cast<int>(fx), cells - 1);
      const double tx = fx - x0;
      const double a = lattice[y0 * g + x0];
      const double b = lattice[y0 * g + x0 + 1];
      const double c = lattice[(y0 + 1) * g + x0];
      const double d = lattice[(y0 + 1) * g + x0 + 1];
      field[static_cast<std::size_t>(y) * size + x] =
          (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
    }
  }
  return field;
}

GrayImage make_background(BackgroundKind kind, int size, double clutter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double base = 0.15 + 0.3 * uni(rng);
  GrayImage img(size, size, base);

  const auto add_field = [&](int cells, double amplitude) {
    const auto f = smooth_field(size, cells, rng);
    for (std::size_t i = 0; i < f.size(); ++i) img[i] += amplitude * f[i];
  };
  switch (kind) {
    case BackgroundKind::Sky: {
      const double slope = 0.08 * (uni(rng) - 0.5);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) img(y, x) += slope * y / size;
      add_field(3, 0.03);
      break;
    }
    case BackgroundKind::Cloud:
      add_field(4, 0.06);
      add_field(8, 0.04);
      break;
    case BackgroundKind::Ground:
      add_field(6, 0.05);
      add_field(12, 0.03);
      break;
    case BackgroundKind::Sea: {
      const double freq = 0.3 + 0.4 * uni(rng);
      const double phase = 6.283185307179586 * uni(rng);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) img(y, x) += 0.03 * std::sin(freq * y + phase);
      add_field(4, 0.03);
      break;
    }
  }
  if (clutter > 0.0) {
    std::normal_distribution<double> noise(0.0, kClutterSigma * clutter);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] += noise(rng);
  }
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = std::clamp(img[i], 0.0, 1.0);
  return img;
}

struct Blob {
  std::vector<int> pixels;        // flat indices
  std::vector<double> profile;    // Gaussian weight per pixel, peak 1
  BoxRegion box;
};

Blob make_blob(int size, double cy, double cx, int area, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double aspect = 0.6 + uni(rng);  // major / minor scale
  const double theta = 3.141592653589793 * uni(rng);
  const double r = std::sqrt(area / 3.141592653589793) / kBlobEdgeSigmas;
  const double su = r * std::sqrt(aspect);
  const double sv = r / std::sqrt(aspect);
  const double ct = std::cos(theta), st = std::sin(theta);
  const int reach = static_cast<int>(std::ceil(2.5 * std::max(su, sv) + 2.0));

  struct Cand {
    double w;
    int idx;
  };
  std::vector<Cand> cands;
  const int icy = static_cast<int>(std::lround(cy));
  const int icx = static_cast<int>(std::lround(cx));
  for (int y = std::max(0, icy - reach); y <= std::min(size - 1, icy + reach); ++y) {
    for (int x = std::max(0, icx - reach); x <= std::min(size - 1, icx + reach); ++x) {
      const double dy = y - cy, dx = x - cx;
      const double u = ct * dx + st * dy;
      const double v = -st * dx + ct * dy;
      cands.push_back({std::exp(-0.5 * (u * u / (su * su) + v * v / (sv * sv))), y * size + x});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.w > b.w; });
  Blob blob;
  blob.box = {size, size, -1, -1};
  const int take = std::min<int>(area, static_cast<int>(cands.size()));
  for (int i = 0; i < take; ++i) {
    const int y = cands[i].idx / size, x = cands[i].idx % size;
    blob.pixels.push_back(cands[i].idx);
    blob.profile.push_back(cands[i].w);
    blob.box.y0 = std::min(blob.box.y0, y);
    blob.box.x0 = std::min(blob.box.x0, x);
    blob.box.y1 = std::max(blob.box.y1, y);
    blob.box.x1 = std::max(blob.box.x1, x);
  }
  return blob;
}

bool overlaps(const BoxRegion& a, const BoxRegion& b) {
  return !(a.y1 < b.y0 || b.y1 < a.y0 || a.x1 < b.x0 || b.x1 < a.x0);
}

BoxRegion grow(const BoxRegion& b, int by) { return {b.y0 - by, b.x0 - by, b.y1 + by, b.x1 + by}; }

int sample_count(const std::vector<double>& pmf, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = uni(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    if (u < acc) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(pmf.size());
}

double sample_lognormal(double median, double sigma, double lo, double hi, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(std::log(median), sigma);
  return std::clamp(std::exp(normal(rng)), lo, hi);
}

}  // namespace

Scene synth_scene(const SceneParams& params, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int size = params.image_size;

  const int count = sample_count(params.target_count_pmf, rng);
  std::vector<int> areas(count);
  std::vector<double> requested(count);
  for (int t = 0; t < count; ++t) {
    areas[t] = static_cast<int>(std::lround(sample_lognormal(
        params.area_median, params.area_log_sigma, params.area_min, params.area_max, rng)));
    requested[t] = sample_lognormal(params.scr_median, params.scr_log_sigma, params.scr_min,
                                    params.scr_max, rng);
  }

  for (int attempt = 0; attempt < kMaxSceneAttempts; ++attempt) {
    const BackgroundKind kind = params.background
                                    ? *params.background
                                    : static_cast<BackgroundKind>(static_cast<int>(uni(rng) * 4) % 4);
    const std::uint64_t clutter_seed = rng();
    GrayImage image = make_background(kind, size, params.clutter_strength, clutter_seed);

    // Place blobs so that no target, or its contrast neighborhood, touches another.
    std::vector<Blob> blobs;
    std::vector<BoxRegion> claimed;
    bool placed = true;
    for (int t = 0; t < count && placed; ++t) {
      placed = false;
      for (int p = 0; p < kMaxPlacementAttempts; ++p) {
        const double margin = 2.0 + std::sqrt(static_cast<double>(areas[t]));
        if (size - 2 * margin <= 1.0) break;
        const double cy = margin + uni(rng) * (size - 1 - 2 * margin);
        const double cx = margin + uni(rng) * (size - 1 - 2 * margin);
        Blob blob = make_blob(size, cy, cx, areas[t], rng);
        const BoxRegion hood = grow(scr_neighborhood(blob.box, size, size), 1);
        bool clash = false;
        for (const auto& c : claimed) clash = clash || overlaps(hood, c);
        if (clash) continue;
        claimed.push_back(hood);
        blobs.push_back(std::move(blob));
        placed = true;
        break;
      }
    }
    if (!placed) continue;

    BinaryMask full(size, size, 0);
    for (const auto& b : blobs)
      for (int idx : b.pixels) full[idx] = 1;

    SceneMeta meta;
    meta.background = kind;
    meta.clutter_seed = clutter_seed;
    bool ok = true;
    for (int t = 0; t < count && ok; ++t) {
      const Blob& b = blobs[t];
      BinaryMask single(size, size, 0);
      double mean_profile = 0.0;
      double bg_on_target = 0.0;
      for (std::size_t k = 0; k < b.pixels.size(); ++k) {
        single[b.pixels[k]] = 1;
        mean_profile += b.profile[k];
        bg_on_target += image[b.pixels[k]];
      }
      mean_profile /= static_cast<double>(b.pixels.size());
      bg_on_target /= static_cast<double>(b.pixels.size());

      SCRStats bg;
      try {
        bg = scr(image, single);
      } catch (const DegenerateBackgroundError&) {
        ok = false;
        break;
      }
      const double amplitude =
          (requested[t] * bg.sigma_c + bg.mu_c - bg_on_target) / mean_profile;
      for (std::size_t k = 0; k < b.pixels.size(); ++k) {
        double& px = image[b.pixels[k]];
        px += amplitude * b.profile[k];
        if (px > 1.0 || px < 0.0) ok = false;
      }
      if (!ok) break;

      const SCRStats achieved = scr(image, single);
      if (std::abs(achieved.scr - requested[t]) > kScrTolerance * requested[t]) {
        ok = false;
        break;
      }
      TargetMeta tm;
      for (int idx : b.pixels) {
        tm.centroid_y += idx / size;
        tm.centroid_x += idx % size;
      }
      tm.centroid_y /= static_cast<double>(b.pixels.size());
      tm.centroid_x /= static_cast<double>(b.pixels.size());
      tm.area = static_cast<int>(b.pixels.size());
      tm.requested_scr = requested[t];
      tm.achieved_scr = achieved.scr;
      meta.targets.push_back(tm);
    }
    if (!ok) continue;
    return Scene{std::move(image), std::move(full), std::move(meta)};
  }
  fail(ErrorKind::Generation, "could not realize the requested targets after " +
                                  std::to_string(kMaxSceneAttempts) + " attempts");
}

Dataset synth_dataset(const SceneParams& params, int n, std::uint64_t seed, Split split) {
  if (n < 1) fail(ErrorKind::Config, "synth_dataset: n must be at least 1");
  Dataset ds;
  ds.split = split;
  ds.items.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t scene_seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i)));
    Scene scene;
    try {
      scene = synth_scene(params, scene_seed);
    } catch (const Error& e) {
      fail(e.kind(), "scene " + std::to_string(i) + ": " + e.what());
    }
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%05d", i);
    ds.items.push_back(Sample{stem, std::move(scene.image), std::move(scene.mask),
                              std::move(scene.meta)});
  }
  return ds;
}

SceneParams load_scene_params(const std::filesystem::path& path) {
  SceneParams p;
  const KeyValueDocument doc = KeyValueDocument::load(path);
  for (const auto& [key, value] : doc.entries()) {
    if (key == "image_size") p.image_size = parse_int(key, value);
    else if (key == "target_count_pmf") p.target_count_pmf = parse_double_list(key, value);
    else if (key == "area_min") p.area_min = parse_double(key, value);
    else if (key == "area_max") p.area_max = parse_double(key, value);
    else if (key == "area_median") p.area_median = parse_double(key, value);
    else if (key == "area_log_sigma") p.area_log_sigma = parse_double(key, value);
    else if (key == "scr_min") p.scr_min = parse_double(key, value);
    else if (key == "scr_max") p.scr_max = parse_double(key, value);
    else if (key == "scr_median") p.scr_median = parse_double(key, value);
    else if (key == "scr_log_sigma") p.scr_log_sigma = parse_double(key, value);
    else if (key == "clutter_strength") p.clutter_strength = parse_double(key, value);
    else if (key == "background") {
      if (value == "mixed") p.background.reset();
      else p.background = parse_background(value);
    } else {
      fail(ErrorKind::Config, "unknown scene parameter '" + key + "'");
    }
  }
  p.validate();
  return p;
}

}  // namespace pixelgame
