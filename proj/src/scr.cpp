#include "pixelgame/scr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pixelgame {

BoxRegion scr_neighborhood(const BoxRegion& box, int height, int width) {
  static const double kGrowth = (std::sqrt(3.0) - 1.0) / 2.0;
  const auto margin = [](int extent) {
    return std::max(1, static_cast<int>(std::ceil(kGrowth * extent - 1e-12)));
  };
  const int my = margin(box.y1 - box.y0 + 1);
  const int mx = margin(box.x1 - box.x0 + 1);
  return {std::max(0, box.y0 - my), std::max(0, box.x0 - mx), std::min(height - 1, box.y1 + my),
          std::min(width - 1, box.x1 + mx)};
}

SCRStats scr(const GrayImage& image, const BinaryMask& target_mask) {
  require_same_shape(image, target_mask, "scr");

  BoxRegion box{image.height(), image.width(), -1, -1};
  double target_sum = 0.0;
  std::size_t target_count = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!target_mask(y, x)) continue;
      box.y0 = std::min(box.y0, y);
      box.x0 = std::min(box.x0, x);
      box.y1 = std::max(box.y1, y);
      box.x1 = std::max(box.x1, x);
      target_sum += image(y, x);
      ++target_count;
    }
  }
  if (target_count == 0) fail(ErrorKind::EmptyTarget, "scr: target mask is empty");

  SCRStats s;
  s.mu_t = target_sum / static_cast<double>(target_count);

  const BoxRegion hood = scr_neighborhood(box, image.height(), image.width());
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = hood.y0; y <= hood.y1; ++y) {
    for (int x = hood.x0; x <= hood.x1; ++x) {
      if (target_mask(y, x)) continue;
      sum += image(y, x);
      ++count;
    }
  }
  if (count == 0) {
    throw DegenerateBackgroundError(s.mu_t, std::numeric_limits<double>::quiet_NaN());
  }
  s.mu_c = sum / static_cast<double>(count);

  double sq = 0.0;
  for (int y = hood.y0; y <= hood.y1; ++y) {
    for (int x = hood.x0; x <= hood.x1; ++x) {
      if (target_mask(y, x)) continue;
      const double d = image(y, x) - s.mu_c;
      sq += d * d;
    }
  }
  s.sigma_c = std::sqrt(sq / static_cast<double>(count));
  // Relative floor: a background that is constant up to rounding noise counts as constant.
  if (s.sigma_c <= 1e-12 * std::max(1.0, std::abs(s.mu_c))) {
    throw DegenerateBackgroundError(s.mu_t, s.mu_c);
  }
  s.scr = std::abs(s.mu_t - s.mu_c) / s.sigma_c;
  return s;
}

}  // namespace pixelgame
