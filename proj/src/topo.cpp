#include "avaseg/topo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "avaseg/error.hpp"
#include "avaseg/parallel.hpp"

namespace avaseg::topo {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

// Release cells as flat coordinate/elevation arrays.
struct ReleaseCells {
  std::vector<std::int32_t> row, col;
  std::vector<double> z;
};

ReleaseCells gather_release(const Raster& dem, const ReleaseMask& mask) {
  ReleaseCells cells;
  for (std::size_t r = 0; r < dem.nrows(); ++r)
    for (std::size_t c = 0; c < dem.ncols(); ++c)
      if (mask.at(r, c) && !dem.is_nodata(dem.at(r, c))) {
        cells.row.push_back(static_cast<std::int32_t>(r));
        cells.col.push_back(static_cast<std::int32_t>(c));
        cells.z.push_back(dem.at(r, c));
      }
  return cells;
}

void check_inputs(const Raster& dem, const ReleaseMask& mask, const ParConfig& cfg) {
  cfg.validate();
  require_same_geometry(dem.geometry(), mask.geometry, "release mask");
  if (mask.flags.size() != dem.geometry().cells()) throw GeometryError("release mask flag count does not match grid");
}

}  // namespace

void ParConfig::validate() const {
  if (!(radius_m > 0)) throw ConfigError("PAR radius must be positive");
  if (!(release_min_deg >= 0 && release_min_deg < release_max_deg && release_max_deg <= 90))
    throw ConfigError("release slope interval must satisfy 0 <= min < max <= 90");
}

std::size_t ReleaseMask::count() const { return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1)); }

Raster compute_slope(const Raster& dem) {
  const std::size_t nc = dem.ncols(), nr = dem.nrows();
  if (nc < 2 || nr < 2) throw GeometryError("slope needs at least a 2x2 DEM");
  const double cell = dem.cell_size();
  Raster out(dem.geometry(), dem.nodata());
  for (std::size_t r = 0; r < nr; ++r) {
    const std::size_t r0 = r == 0 ? 0 : r - 1, r1 = r + 1 == nr ? r : r + 1;
    for (std::size_t c = 0; c < nc; ++c) {
      const std::size_t c0 = c == 0 ? 0 : c - 1, c1 = c + 1 == nc ? c : c + 1;
      const float zl = dem.at(r, c0), zr = dem.at(r, c1), zu = dem.at(r0, c), zd = dem.at(r1, c);
      if (dem.is_nodata(zl) || dem.is_nodata(zr) || dem.is_nodata(zu) || dem.is_nodata(zd) ||
          dem.is_nodata(dem.at(r, c))) {
        out.at(r, c) = dem.nodata();
        continue;
      }
      const double gx = (static_cast<double>(zr) - zl) / (static_cast<double>(c1 - c0) * cell);
      const double gy = (static_cast<double>(zu) - zd) / (static_cast<double>(r1 - r0) * cell);
      out.at(r, c) = static_cast<float>(std::atan(std::sqrt(gx * gx + gy * gy)) * kRadToDeg);
    }
  }
  return out;
}

ReleaseMask compute_release_mask(const Raster& slope, const ParConfig& cfg) {
  cfg.validate();
  ReleaseMask mask{slope.geometry(), std::vector<std::uint8_t>(slope.geometry().cells(), 0)};
  auto v = slope.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (slope.is_nodata(v[i])) continue;
    mask.flags[i] = (v[i] >= cfg.release_min_deg && v[i] <= cfg.release_max_deg) ? 1 : 0;
  }
  return mask;
}

Raster par_bruteforce(const Raster& dem, const ReleaseMask& mask, const ParConfig& cfg) {
  check_inputs(dem, mask, cfg);
  const auto cells = gather_release(dem, mask);
  const double cell = dem.cell_size();
  const double r2max = cfg.radius_m * cfg.radius_m;
  Raster out(dem.geometry(), dem.nodata());
  for (std::size_t r = 0; r < dem.nrows(); ++r) {
    for (std::size_t c = 0; c < dem.ncols(); ++c) {
      const float zp = dem.at(r, c);
      if (dem.is_nodata(zp)) {
        out.at(r, c) = dem.nodata();
        continue;
      }
      // atan is monotone, so the steepest elevation ratio gives the max angle.
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < cells.z.size(); ++k) {
        const double dr = cells.row[k] - static_cast<double>(r);
        const double dc = cells.col[k] - static_cast<double>(c);
        const double d2 = (dr * dr + dc * dc) * (cell * cell);
        if (d2 == 0.0 || d2 > r2max) continue;
        best = std::max(best, (cells.z[k] - zp) / std::sqrt(d2));
      }
      out.at(r, c) = std::isinf(best) ? static_cast<float>(cfg.empty_value_deg)
                                      : static_cast<float>(std::atan(best) * kRadToDeg);
    }
  }
  return out;
}

namespace {

constexpr std::int32_t kBlock = 16;

struct Block {
  std::int32_t row0, col0, row1, col1;  // inclusive cell-index extents of the release cells
  double zmax;
  std::vector<std::int32_t> rows, cols;
  std::vector<double> z;
};

}  // namespace

Raster par_fast(const Raster& dem, const ReleaseMask& mask, const ParConfig& cfg) {
  check_inputs(dem, mask, cfg);
  const auto& g = dem.geometry();
  Raster out(g, dem.nodata());
  const float empty = static_cast<float>(cfg.empty_value_deg);

  const auto cells = gather_release(dem, mask);
  if (cells.z.empty()) {
    for (std::size_t i = 0; i < g.cells(); ++i) out.values()[i] = dem.is_nodata(dem.values()[i]) ? dem.nodata() : empty;
    return out;
  }

  // Bucket release cells into fixed blocks with tight extents and max elevation.
  const std::int32_t nbr = static_cast<std::int32_t>((g.nrows + kBlock - 1) / kBlock);
  const std::int32_t nbc = static_cast<std::int32_t>((g.ncols + kBlock - 1) / kBlock);
  std::vector<Block> grid(static_cast<std::size_t>(nbr) * nbc);
  for (auto& b : grid) {
    b.row0 = b.col0 = std::numeric_limits<std::int32_t>::max();
    b.row1 = b.col1 = std::numeric_limits<std::int32_t>::min();
    b.zmax = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t k = 0; k < cells.z.size(); ++k) {
    auto& b = grid[static_cast<std::size_t>(cells.row[k] / kBlock) * nbc + cells.col[k] / kBlock];
    b.rows.push_back(cells.row[k]);
    b.cols.push_back(cells.col[k]);
    b.z.push_back(cells.z[k]);
    b.row0 = std::min(b.row0, cells.row[k]);
    b.row1 = std::max(b.row1, cells.row[k]);
    b.col0 = std::min(b.col0, cells.col[k]);
    b.col1 = std::max(b.col1, cells.col[k]);
    b.zmax = std::max(b.zmax, cells.z[k]);
  }
  // Block offsets ordered nearest-first so the running maximum tightens early.
  const double cell = dem.cell_size();
  const double r2max = cfg.radius_m * cfg.radius_m;
  const double reach_cells = cfg.radius_m / cell;
  const std::int32_t reach_blocks = static_cast<std::int32_t>(std::ceil(reach_cells / kBlock)) + 1;
  std::vector<std::pair<std::int32_t, std::int32_t>> offsets;
  for (std::int32_t di = -reach_blocks; di <= reach_blocks; ++di)
    for (std::int32_t dj = -reach_blocks; dj <= reach_blocks; ++dj) offsets.emplace_back(di, dj);
  std::stable_sort(offsets.begin(), offsets.end(), [](const auto& a, const auto& b) {
    return std::max(std::abs(a.first), std::abs(a.second)) < std::max(std::abs(b.first), std::abs(b.second));
  });

  parallel_for(g.nrows, [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t r = row_begin; r < row_end; ++r) {
      const double pr = static_cast<double>(r);
      const std::int32_t bi = static_cast<std::int32_t>(r) / kBlock;
      for (std::size_t c = 0; c < g.ncols; ++c) {
        const float zp_f = dem.at(r, c);
        if (dem.is_nodata(zp_f)) {
          out.at(r, c) = dem.nodata();
          continue;
        }
        const double zp = zp_f;
        const double pc = static_cast<double>(c);
        const std::int32_t bj = static_cast<std::int32_t>(c) / kBlock;

        double best = -std::numeric_limits<double>::infinity();
        for (const auto& [di, dj] : offsets) {
          const std::int32_t i = bi + di, j = bj + dj;
          if (i < 0 || j < 0 || i >= nbr || j >= nbc) continue;
          const Block& b = grid[static_cast<std::size_t>(i) * nbc + j];
          if (b.z.empty()) continue;
          const double ddr = std::max({b.row0 - pr, 0.0, pr - b.row1});
          const double ddc = std::max({b.col0 - pc, 0.0, pc - b.col1});
          const double dmin2 = ddr * ddr + ddc * ddc;
          if (dmin2 * (cell * cell) > r2max) continue;
          // Upper bound of the elevation ratio over the block's release cells.
          const double rise = b.zmax - zp;
          if (rise >= 0) {
            if (dmin2 > 0.0 && rise / (std::sqrt(dmin2) * cell) <= best) continue;
          } else {
            const double fr = std::max(std::abs(b.row0 - pr), std::abs(b.row1 - pr));
            const double fc = std::max(std::abs(b.col0 - pc), std::abs(b.col1 - pc));
            const double dmax = std::min(std::sqrt(fr * fr + fc * fc), reach_cells) * cell;
            if (rise / dmax <= best) continue;
          }
          for (std::size_t k = 0; k < b.z.size(); ++k) {
            const double dr = b.rows[k] - pr;
            const double dc = b.cols[k] - pc;
            const double d2 = (dr * dr + dc * dc) * (cell * cell);
            if (d2 == 0.0 || d2 > r2max) continue;
            best = std::max(best, (b.z[k] - zp) / std::sqrt(d2));
          }
        }
        out.at(r, c) = std::isinf(best) ? empty : static_cast<float>(std::atan(best) * kRadToDeg);
      }
    }
  });
  return out;
}

Histogram class_histograms(const Raster& feature, const Raster& labels, double bin_width) {
  if (!(bin_width > 0)) throw ConfigError("histogram bin width must be positive");
  require_same_geometry(feature.geometry(), labels.geometry(), "histogram labels");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < feature.values().size(); ++i) {
    const float l = labels.values()[i];
    if (l != 0.0f && l != 1.0f) throw ConfigError("labels must be binary, found value " + std::to_string(l));
    const float v = feature.values()[i];
    if (feature.is_nodata(v)) continue;
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  Histogram h;
  if (std::isinf(lo)) return h;
  const double first = std::floor(lo / bin_width) * bin_width;
  const std::size_t nbins = static_cast<std::size_t>(std::floor((hi - first) / bin_width)) + 1;
  for (std::size_t i = 0; i <= nbins; ++i) h.bin_edges.push_back(first + static_cast<double>(i) * bin_width);
  h.counts_avalanche.assign(nbins, 0);
  h.counts_background.assign(nbins, 0);
  for (std::size_t i = 0; i < feature.values().size(); ++i) {
    const float v = feature.values()[i];
    if (feature.is_nodata(v)) continue;
    auto bin = static_cast<std::size_t>(std::floor((v - first) / bin_width));
    bin = std::min(bin, nbins - 1);
    (labels.values()[i] == 1.0f ? h.counts_avalanche : h.counts_background)[bin]++;
  }
  return h;
}

std::vector<double> normalized(const std::vector<std::uint64_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  std::vector<double> out(counts.size(), 0.0);
  if (total > 0)
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / total;
  return out;
}

std::string histogram_csv(const Histogram& h) {
  auto fmt = [](double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  const auto av = normalized(h.counts_avalanche);
  const auto bg = normalized(h.counts_background);
  std::string out = "bin_lo,bin_hi,avalanche,background\n";
  for (std::size_t i = 0; i + 1 < h.bin_edges.size(); ++i)
    out += fmt(h.bin_edges[i]) + "," + fmt(h.bin_edges[i + 1]) + "," + fmt(av[i]) + "," + fmt(bg[i]) + "\n";
  return out;
}

}  // namespace avaseg::topo
