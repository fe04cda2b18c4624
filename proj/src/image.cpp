#include "pixelgame/image.hpp"

#include <algorithm>
#include <cmath>

namespace pixelgame {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Generation: return "generation error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Version: return "version error";
    case ErrorKind::EmptyTarget: return "empty-target error";
    case ErrorKind::DegenerateBackground: return "degenerate-background error";
  }
  return "error";
}

namespace {

template <typename G>
void check_unit_range(const G& grid, const char* what) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = grid[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorKind::Config, std::string(what) + " value out of [0,1] at index " +
                                  std::to_string(i) + ": " + std::to_string(v));
    }
  }
}

}  // namespace

void validate(const GrayImage& image) { check_unit_range(image, "image"); }

void validate(const ProbabilityMap& map) { check_unit_range(map, "probability map"); }

void validate(const BinaryMask& mask) {
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] > 1) {
      fail(ErrorKind::Config, "mask value is not binary at index " + std::to_string(i));
    }
  }
}

GrayImage image_from_u8(int height, int width, std::span<const std::uint8_t> pixels) {
  GrayImage image(height, width);
  if (pixels.size() != image.size()) {
    fail(ErrorKind::Dimension, "8-bit buffer size does not match image shape");
  }
  for (std::size_t i = 0; i < pixels.size(); ++i) image[i] = pixels[i] / 255.0;
  return image;
}

std::vector<std::uint8_t> image_to_u8(const GrayImage& image) {
  std::vector<std::uint8_t> out(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

GrayImage quantize_u8(const GrayImage& image) {
  const auto bytes = image_to_u8(image);
  return image_from_u8(image.height(), image.width(), bytes);
}

}  // namespace pixelgame
