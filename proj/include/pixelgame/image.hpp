#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pixelgame/error.hpp"

namespace pixelgame {

/// Row-major H x W grid. The tag keeps images, masks and probability maps
/// from being mixed up at call sites.
template <typename T, typename Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int height, int width, T fill = T{}) : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      fail(ErrorKind::Dimension, "grid dimensions must be positive, got " +
                                     std::to_string(height) + "x" + std::to_string(width));
    }
    values_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }
  Grid(int height, int width, std::vector<T> values) : Grid(height, width) {
    if (values.size() != values_.size()) {
      fail(ErrorKind::Dimension, "grid value count does not match " + std::to_string(height) +
                                     "x" + std::to_string(width));
    }
    values_ = std::move(values);
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(int y, int x) { return values_[index(y, x)]; }
  const T& operator()(int y, int x) const { return values_[index(y, x)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  template <typename OT, typename OTag>
  bool same_shape(const Grid<OT, OTag>& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int y, int x) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> values_;
};

struct GrayTag {};
struct MaskTag {};
struct ProbTag {};

/// Normalized grayscale intensities in [0,1].
using GrayImage = Grid<double, GrayTag>;
/// Exactly 0 or 1 per pixel.
using BinaryMask = Grid<std::uint8_t, MaskTag>;
/// Per-pixel foreground probability in [0,1].
using ProbabilityMap = Grid<double, ProbTag>;

/// Throws Config/Dimension errors when values leave their documented range.
void validate(const GrayImage& image);
void validate(const BinaryMask& mask);
void validate(const ProbabilityMap& map);

template <typename A, typename ATag, typename B, typename BTag>
void require_same_shape(const Grid<A, ATag>& a, const Grid<B, BTag>& b, const char* where) {
  if (!a.same_shape(b)) {
    fail(ErrorKind::Dimension, std::string(where) + ": shape mismatch " +
                                   std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                                   " vs " + std::to_string(b.height()) + "x" +
                                   std::to_string(b.width()));
  }
}

/// 8-bit inputs are normalized by 1/255.
GrayImage image_from_u8(int height, int width, std::span<const std::uint8_t> pixels);
std::vector<std::uint8_t> image_to_u8(const GrayImage& image);

/// Rounds every pixel to the nearest 8-bit level.
GrayImage quantize_u8(const GrayImage& image);

}  // namespace pixelgame
