#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace pixelgame {

struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 1;  // 1 = gray, 3 = RGB
  std::vector<std::uint8_t> pixels;
};

/// Reads any 8/16-bit PNG and converts it to 8-bit grayscale (luma for color,
/// alpha dropped).
RawImage read_png_gray(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RawImage& image);

}  // namespace pixelgame
