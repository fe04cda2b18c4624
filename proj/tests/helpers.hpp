#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "pixelgame/image.hpp"

namespace testutil {

inline pixelgame::ProbabilityMap prob(int h, int w, std::initializer_list<double> v) {
  return pixelgame::ProbabilityMap(h, w, std::vector<double>(v));
}

inline pixelgame::BinaryMask mask(int h, int w, std::initializer_list<int> v) {
  std::vector<std::uint8_t> bits;
  for (int b : v) bits.push_back(static_cast<std::uint8_t>(b));
  return pixelgame::BinaryMask(h, w, bits);
}

inline pixelgame::ProbabilityMap random_prob(int h, int w, std::mt19937_64& rng, double lo = 0.0,
                                             double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  pixelgame::ProbabilityMap m(h, w);
  for (auto& x : m.values()) x = u(rng);
  return m;
}

inline pixelgame::BinaryMask random_mask(int h, int w, std::mt19937_64& rng, int one_in = 3) {
  pixelgame::BinaryMask m(h, w);
  for (auto& x : m.values()) x = static_cast<std::uint8_t>(rng() % one_in == 0);
  return m;
}

/// A fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pixelgame_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
