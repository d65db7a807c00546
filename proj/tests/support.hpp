#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "avaseg/raster.hpp"
#include "avaseg/rng.hpp"

namespace avaseg::fixtures {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("avaseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline GridGeometry square(std::size_t n, double cell = 20.0) { return GridGeometry{n, n, 1000.0, 2000.0, cell}; }

inline Raster random_raster(const GridGeometry& g, Rng& rng, double lo, double hi) {
  Raster r(g);
  for (auto& v : r.values()) v = static_cast<float>(rng.uniform(lo, hi));
  return r;
}

inline Raster random_mask(const GridGeometry& g, Rng& rng, double p) {
  Raster r(g);
  for (auto& v : r.values()) v = rng.bernoulli(p) ? 1.0f : 0.0f;
  return r;
}

/// Sum of a few Gaussian hills plus a tilt; rough enough to have release cells.
inline Raster hilly_dem(std::size_t n, double cell, Rng& rng, std::size_t hills = 6) {
  Raster dem(square(n, cell));
  struct Hill {
    double r, c, h, s;
  };
  std::vector<Hill> hs;
  for (std::size_t i = 0; i < hills; ++i)
    hs.push_back({rng.uniform(0, n), rng.uniform(0, n), rng.uniform(100, 900), rng.uniform(3, n / 3.0 + 3)});
  const double tilt = rng.uniform(-5, 5);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      double z = tilt * static_cast<double>(c);
      for (const auto& h : hs) {
        const double d2 = (r - h.r) * (r - h.r) + (c - h.c) * (c - h.c);
        z += h.h * std::exp(-d2 / (2 * h.s * h.s));
      }
      dem.at(r, c) = static_cast<float>(z);
    }
  return dem;
}

}  // namespace avaseg::fixtures
