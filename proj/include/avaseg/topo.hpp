#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avaseg/raster.hpp"

namespace avaseg::topo {

struct ParConfig {
  double radius_m = 4000.0;
  double release_min_deg = 30.0;
  double release_max_deg = 50.0;
  /// Assigned where no release cell lies within the radius.
  double empty_value_deg = 0.0;

  void validate() const;
};

/// Potential release cells: slope within [release_min, release_max].
struct ReleaseMask {
  GridGeometry geometry;
  std::vector<std::uint8_t> flags;

  bool at(std::size_t row, std::size_t col) const { return flags[row * geometry.ncols + col] != 0; }
  std::size_t count() const;
};

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::uint64_t> counts_avalanche;
  std::vector<std::uint64_t> counts_background;
};

/// Terrain slope in degrees. Central differences in the interior, one-sided
/// at the borders; any nodata input used by a cell makes that cell nodata.
Raster compute_slope(const Raster& dem);

ReleaseMask compute_release_mask(const Raster& slope, const ParConfig& cfg);

/// Reference PAR: exhaustive scan of every release cell for every output cell.
Raster par_bruteforce(const Raster& dem, const ReleaseMask& mask, const ParConfig& cfg);

/// Block-pruned PAR, equal to par_bruteforce. Parallel over rows.
Raster par_fast(const Raster& dem, const ReleaseMask& mask, const ParConfig& cfg);

Histogram class_histograms(const Raster& feature, const Raster& labels, double bin_width);

/// Counts divided by the class total (all zeros for an empty class).
std::vector<double> normalized(const std::vector<std::uint64_t>& counts);

/// CSV with header `bin_lo,bin_hi,avalanche,background`, normalized fractions.
std::string histogram_csv(const Histogram& h);

}  // namespace avaseg::topo
