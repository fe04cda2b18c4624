#pragma once

#include "pixelgame/image.hpp"

namespace pixelgame {

struct SCRStats {
  double mu_t = 0.0;
  double mu_c = 0.0;
  double sigma_c = 0.0;
  double scr = 0.0;
};

/// Inclusive pixel rectangle.
struct BoxRegion {
  int y0 = 0;
  int x0 = 0;
  int y1 = 0;
  int x1 = 0;
};

/// Neighborhood window for a target bounding box: each axis grows by
/// ceil((sqrt(3) - 1) * extent / 2) pixels per side (at least one), so the
/// window covers roughly three times the box area. Clipped to the image.
BoxRegion scr_neighborhood(const BoxRegion& target_box, int height, int width);

/// Signal-to-clutter ratio |mu_t - mu_c| / sigma_c. The neighborhood excludes
/// every pixel set in `target_mask`; sigma_c is the population deviation.
/// Throws EmptyTarget for an empty mask and DegenerateBackgroundError when
/// sigma_c is zero.
SCRStats scr(const GrayImage& image, const BinaryMask& target_mask);

}  // namespace pixelgame
