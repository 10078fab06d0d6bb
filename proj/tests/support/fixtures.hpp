#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "varbg/types.hpp"

namespace varbg::fixture {

inline Frame random_frame(int h, int w, std::uint64_t seed, int lo = 0, int hi = 255) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(lo, hi);
  Frame f(h, w);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = static_cast<std::uint8_t>(dist(rng));
  return f;
}

inline ResidualMap random_residuals(int h, int w, std::uint64_t seed, int hi = 255) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, hi);
  ResidualMap r(h, w);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = dist(rng);
  return r;
}

/// Smooth-ish static texture in [lo, lo + span].
inline Frame textured_background(int h, int w, std::uint64_t seed, int lo = 60, int span = 40) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
  Frame f(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = 0.5 + 0.2 * std::sin(0.31 * x + p1) + 0.2 * std::sin(0.23 * y + p2) + 0.1 * std::sin(0.17 * (x + y) + p3);
      f(y, x) = static_cast<std::uint8_t>(std::lround(lo + span * std::clamp(v, 0.0, 1.0)));
    }
  }
  return f;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("varbg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace varbg::fixture
