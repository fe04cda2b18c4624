#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "pixelgame/data.hpp"
#include "pixelgame/png_io.hpp"
#include "pixelgame/scr.hpp"

namespace fs = std::filesystem;

namespace pixelgame {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::All: return "all";
  }
  return "all";
}

namespace {

// Mask pixels strictly between these levels are treated as anti-aliasing.
constexpr int kMaskLowTolerance = 8;
constexpr int kMaskHighTolerance = 247;
constexpr int kMaskThreshold = 128;

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::map<std::string, SceneMeta> read_meta_csv(const fs::path& path) {
  std::map<std::string, SceneMeta> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);  // header
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_on(line, ',');
    if (cols.size() != 4) {
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) + ": expected 4 columns");
    }
    SceneMeta meta;
    const int count = std::stoi(cols[1]);
    const auto areas = cols[2].empty() ? std::vector<std::string>{} : split_on(cols[2], ';');
    const auto scrs = cols[3].empty() ? std::vector<std::string>{} : split_on(cols[3], ';');
    if (static_cast<int>(areas.size()) != count || static_cast<int>(scrs.size()) != count) {
      fail(ErrorKind::Data, path.string() + ":" + std::to_string(line_no) +
                                ": target_count does not match the area/scr lists");
    }
    for (int t = 0; t < count; ++t) {
      TargetMeta tm;
      tm.area = std::stoi(areas[t]);
      tm.achieved_scr = std::stod(scrs[t]);
      tm.requested_scr = tm.achieved_scr;
      meta.targets.push_back(tm);
    }
    out.emplace(cols[0], std::move(meta));
  }
  return out;
}

std::vector<std::string> read_split_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read split file '" + path.string() + "'");
  std::vector<std::string> stems;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) stems.push_back(line);
  }
  return stems;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

}  // namespace

Dataset load_dataset(const fs::path& root, const LoadOptions& options,
                     std::vector<std::string>* warnings) {
  const auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  Dataset ds;
  ds.split = options.split.value_or(Split::All);
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    fail(ErrorKind::Data, "dataset root '" + root.string() + "' is not a directory");
  }
  const fs::path image_dir = root / "images";
  const fs::path mask_dir = root / "masks";
  std::vector<std::string> stems;
  if (fs::is_directory(image_dir, ec)) {
    for (const auto& entry : fs::directory_iterator(image_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        stems.push_back(entry.path().stem().string());
      }
    }
  }
  std::sort(stems.begin(), stems.end());

  if (options.split && *options.split != Split::All) {
    const fs::path split_file = root / "splits" / (std::string(to_string(*options.split)) + ".txt");
    if (fs::exists(split_file, ec)) {
      const auto listed = read_split_file(split_file);
      const std::set<std::string> available(stems.begin(), stems.end());
      std::vector<std::string> chosen;
      for (const auto& s : listed) {
        if (!available.count(s)) {
          fail(ErrorKind::Data, "split file lists '" + s + "' but images/" + s + ".png is missing");
        }
        chosen.push_back(s);
      }
      std::sort(chosen.begin(), chosen.end());
      chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
      stems = std::move(chosen);
    }
  }

  if (stems.empty()) {
    warn("no images found under '" + root.string() + "'");
    return ds;
  }
  const auto meta = read_meta_csv(root / "meta.csv");

  for (const auto& stem : stems) {
    const fs::path mask_path = mask_dir / (stem + ".png");
    if (!fs::exists(mask_path, ec)) {
      fail(ErrorKind::Data, "image '" + stem + "' has no mask (expected " + mask_path.string() + ")");
    }
    const RawImage raw_img = read_png_gray(image_dir / (stem + ".png"));
    const RawImage raw_mask = read_png_gray(mask_path);
    if (raw_img.height != raw_mask.height || raw_img.width != raw_mask.width) {
      fail(ErrorKind::Dimension, "image and mask sizes differ for '" + stem + "'");
    }
    Sample s;
    s.stem = stem;
    s.image = image_from_u8(raw_img.height, raw_img.width, raw_img.pixels);
    s.mask = BinaryMask(raw_mask.height, raw_mask.width, 0);
    int fuzzy = 0;
    for (std::size_t i = 0; i < raw_mask.pixels.size(); ++i) {
      const int v = raw_mask.pixels[i];
      if (v > kMaskLowTolerance && v < kMaskHighTolerance) ++fuzzy;
      s.mask[i] = v >= kMaskThreshold ? 1 : 0;
    }
    if (fuzzy > 0) {
      warn("mask '" + stem + "' has " + std::to_string(fuzzy) +
           " non-binary pixels; binarized at 128");
    }
    if (auto it = meta.find(stem); it != meta.end()) s.meta = it->second;
    ds.items.push_back(std::move(s));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  fs::create_directories(root / "masks", ec);
  if (ec) fail(ErrorKind::Io, "cannot create '" + root.string() + "': " + ec.message());

  bool any_meta = false;
  std::ostringstream meta;
  meta << "stem,target_count,areas,scrs\n";
  meta.precision(9);
  for (const auto& s : dataset.items) {
    require_same_shape(s.image, s.mask, "save_dataset");
    RawImage img{s.image.height(), s.image.width(), 1, image_to_u8(s.image)};
    write_png(root / "images" / (s.stem + ".png"), img);
    RawImage mask{s.mask.height(), s.mask.width(), 1, {}};
    mask.pixels.reserve(s.mask.size());
    for (auto v : s.mask.values()) mask.pixels.push_back(v ? 255 : 0);
    write_png(root / "masks" / (s.stem + ".png"), mask);
    if (s.meta) {
      any_meta = true;
      meta << s.stem << ',' << s.meta->targets.size() << ',';
      for (std::size_t t = 0; t < s.meta->targets.size(); ++t) {
        meta << (t ? ";" : "") << s.meta->targets[t].area;
      }
      meta << ',';
      for (std::size_t t = 0; t < s.meta->targets.size(); ++t) {
        meta << (t ? ";" : "") << s.meta->targets[t].achieved_scr;
      }
      meta << '\n';
    }
  }
  if (any_meta) write_text(root / "meta.csv", meta.str());
  if (dataset.split != Split::All) {
    fs::create_directories(root / "splits", ec);
    std::string listing;
    for (const auto& s : dataset.items) listing += s.stem + "\n";
    write_text(root / "splits" / (std::string(to_string(dataset.split)) + ".txt"), listing);
  }
}

std::pair<Dataset, Dataset> resplit(const Dataset& dataset, double train_fraction,
                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(ErrorKind::Config, "train_fraction must lie in (0,1)");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_first =
      static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(dataset.size())));
  Dataset first, second;
  first.split = Split::Train;
  second.split = Split::Val;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_first ? first : second).items.push_back(dataset.items[order[k]]);
  }
  return {std::move(first), std::move(second)};
}

GrayImage resize_bilinear(const GrayImage& image, int height, int width) {
  GrayImage out(height, width);
  const int h = image.height(), w = image.width();
  if (h == height && w == width) return image;
  const double sy = static_cast<double>(h) / height;
  const double sx = static_cast<double>(w) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - x0;
      out(y, x) = (1 - ty) * ((1 - tx) * image(y0, x0) + tx * image(y0, x1)) +
                  ty * ((1 - tx) * image(y1, x0) + tx * image(y1, x1));
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int height, int width) {
  if (mask.height() == height && mask.width() == width) return mask;
  BinaryMask out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height() - 1, static_cast<int>((y + 0.5) * mask.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width() - 1, static_cast<int>((x + 0.5) * mask.width() / width));
      out(y, x) = mask(sy, sx);
    }
  }
  return out;
}

std::pair<GrayImage, BinaryMask> augment(const GrayImage& image, const BinaryMask& mask,
                                         const AugmentConfig& config, std::mt19937_64& rng) {
  require_same_shape(image, mask, "augment");
  if (config.resize < 1 || config.crop < 1) fail(ErrorKind::Config, "resize and crop must be positive");
  if (config.crop > config.resize) {
    fail(ErrorKind::Config, "crop (" + std::to_string(config.crop) + ") exceeds resize (" +
                                std::to_string(config.resize) + ")");
  }
  const GrayImage img = resize_bilinear(image, config.resize, config.resize);
  const BinaryMask msk = resize_nearest(mask, config.resize, config.resize);
  const int slack = config.resize - config.crop;
  // Always consume two draws so the stream position does not depend on the sizes.
  const int oy = static_cast<int>(rng() % static_cast<std::uint64_t>(slack + 1));
  const int ox = static_cast<int>(rng() % static_cast<std::uint64_t>(slack + 1));
  if (slack == 0) return {img, msk};
  GrayImage ci(config.crop, config.crop);
  BinaryMask cm(config.crop, config.crop);
  for (int y = 0; y < config.crop; ++y) {
    for (int x = 0; x < config.crop; ++x) {
      ci(y, x) = img(y + oy, x + ox);
      cm(y, x) = msk(y + oy, x + ox);
    }
  }
  return {std::move(ci), std::move(cm)};
}

Components connected_components(const BinaryMask& mask) {
  const int h = mask.height(), w = mask.width();
  Components cc;
  cc.labels.assign(mask.size(), 0);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * w + x;
      if (!mask[start] || cc.labels[start]) continue;
      const int label = ++cc.count;
      int area = 0;
      cc.labels[start] = label;
      stack.assign(1, static_cast<int>(start));
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        ++area;
        const int py = p / w, px = p % w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = py + dy, nx = px + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
            if (mask[q] && !cc.labels[q]) {
              cc.labels[q] = label;
              stack.push_back(static_cast<int>(q));
            }
          }
        }
      }
      cc.areas.push_back(area);
    }
  }
  return cc;
}

double StatsReport::single_target_fraction() const {
  if (images == 0) return 0.0;
  const auto it = targets_per_image.find(1);
  return it == targets_per_image.end() ? 0.0 : static_cast<double>(it->second) / images;
}

double StatsReport::fraction_area_below(int area) const {
  if (targets == 0) return 0.0;
  int below = 0;
  for (const auto& [a, count] : area_histogram) {
    if (a < area) below += count;
  }
  return static_cast<double>(below) / targets;
}

double StatsReport::fraction_scr_below(double value) const {
  if (scr_values.empty()) return 0.0;
  const auto below = std::count_if(scr_values.begin(), scr_values.end(),
                                   [&](double s) { return s < value; });
  return static_cast<double>(below) / static_cast<double>(scr_values.size());
}

StatsReport dataset_stats(const Dataset& dataset) {
  StatsReport r;
  for (const auto& s : dataset.items) {
    require_same_shape(s.image, s.mask, "dataset_stats");
    const Components cc = connected_components(s.mask);
    ++r.images;
    ++r.targets_per_image[cc.count];
    for (int k = 0; k < cc.count; ++k) {
      ++r.targets;
      ++r.area_histogram[cc.areas[k]];
      BinaryMask single(s.mask.height(), s.mask.width(), 0);
      for (std::size_t i = 0; i < single.size(); ++i) single[i] = cc.labels[i] == k + 1 ? 1 : 0;
      try {
        const double value = scr(s.image, single).scr;
        r.scr_values.push_back(value);
        ++r.scr_histogram[static_cast<int>(std::floor(value))];
      } catch (const DegenerateBackgroundError&) {
        ++r.scr_undefined;
      }
    }
  }
  int running = 0;
  for (const auto& [area, count] : r.area_histogram) {
    running += count;
    r.cumulative_area.emplace_back(area, static_cast<double>(running) / r.targets);
  }
  return r;
}

}  // namespace pixelgame
