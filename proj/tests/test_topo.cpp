#include <gtest/gtest.h>

#include <cmath>

#include "avaseg/error.hpp"
#include "avaseg/topo.hpp"
#include "support.hpp"

using namespace avaseg;
using namespace avaseg::topo;

namespace {

constexpr double kDeg = 180.0 / 3.14159265358979323846;

Raster plane(std::size_t n, double cell, double gx, double gy) {
  Raster dem(fixtures::square(n, cell));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      dem.at(r, c) = static_cast<float>(gx * c * cell - gy * r * cell);
  return dem;
}

// Independent slope oracle: explicit neighbour lookups per cell.
double slope_oracle(const Raster& dem, std::size_t r, std::size_t c) {
  const double h = dem.cell_size();
  const std::size_t n = dem.ncols(), m = dem.nrows();
  double gx, gy;
  if (c == 0) gx = (dem.at(r, 1) - dem.at(r, 0)) / h;
  else if (c == n - 1) gx = (dem.at(r, n - 1) - dem.at(r, n - 2)) / h;
  else gx = (dem.at(r, c + 1) - dem.at(r, c - 1)) / (2 * h);
  if (r == 0) gy = (dem.at(1, c) - dem.at(0, c)) / h;
  else if (r == m - 1) gy = (dem.at(m - 1, c) - dem.at(m - 2, c)) / h;
  else gy = (dem.at(r + 1, c) - dem.at(r - 1, c)) / (2 * h);
  return std::atan(std::sqrt(gx * gx + gy * gy)) * kDeg;
}

ReleaseMask mask_from(const GridGeometry& g, std::vector<std::pair<std::size_t, std::size_t>> cells) {
  ReleaseMask m{g, std::vector<std::uint8_t>(g.cells(), 0)};
  for (auto [r, c] : cells) m.flags[r * g.ncols + c] = 1;
  return m;
}

ParConfig random_config(Rng& rng, double cell, std::size_t n) {
  ParConfig cfg;
  cfg.radius_m = rng.uniform(2.0, static_cast<double>(n)) * cell;
  cfg.release_min_deg = rng.uniform(10, 30);
  cfg.release_max_deg = cfg.release_min_deg + rng.uniform(5, 30);
  cfg.empty_value_deg = rng.bernoulli(0.5) ? 0.0 : -5.0;
  return cfg;
}

void expect_par_equal(const Raster& a, const Raster& b, double tol) {
  ASSERT_EQ(a.values().size(), b.values().size());
  double worst = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i) worst = std::max(worst, std::abs(double(a.values()[i]) - b.values()[i]));
  EXPECT_LE(worst, tol);
}

}  // namespace

TEST(Slope, PlaneAlongXIs45) {
  const Raster s = compute_slope(plane(8, 20, 1.0, 0.0));
  for (std::size_t r = 1; r < 7; ++r)
    for (std::size_t c = 1; c < 7; ++c) EXPECT_NEAR(s.at(r, c), 45.0, 1e-5);
}

TEST(Slope, ConstantDemIsFlat) {
  Raster dem(fixtures::square(5));
  for (auto& v : dem.values()) v = 1234.5f;
  const Raster s = compute_slope(dem);
  for (float v : s.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Slope, PlanarIsAnalyticEverywhere) {
  const double gx = 0.3, gy = -0.7;
  const Raster s = compute_slope(plane(9, 10, gx, gy));
  const double expected = std::atan(std::hypot(gx, gy)) * kDeg;
  for (float v : s.values()) EXPECT_NEAR(v, expected, 1e-4);
}

TEST(Slope, RandomDemMatchesOracle) {
  Rng rng(3);
  const Raster dem = fixtures::random_raster(fixtures::square(16, 20), rng, 0, 300);
  const Raster s = compute_slope(dem);
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(s.at(r, c), slope_oracle(dem, r, c), 1e-5);
}

TEST(Slope, TooSmallIsRejected) { EXPECT_THROW(compute_slope(Raster(GridGeometry{1, 4, 0, 0, 1})), GeometryError); }

TEST(Slope, NodataPropagates) {
  Raster dem = plane(6, 10, 0.5, 0.0);
  dem.at(2, 2) = dem.nodata();
  const Raster s = compute_slope(dem);
  EXPECT_TRUE(s.is_nodata(s.at(2, 2)));
  EXPECT_TRUE(s.is_nodata(s.at(2, 3)));
  EXPECT_FALSE(s.is_nodata(s.at(0, 0)));
}

TEST(ReleaseMask, ClosedInterval) {
  Raster s(GridGeometry{5, 1, 0, 0, 1}, -9999.0f, {40, 20, 55, 30, 50});
  const auto m = compute_release_mask(s, ParConfig{});
  EXPECT_EQ(m.flags, (std::vector<std::uint8_t>{1, 0, 0, 1, 1}));
  EXPECT_EQ(m.count(), 3u);
}

TEST(ReleaseMask, NodataIsNotRelease) {
  Raster s(GridGeometry{2, 1, 0, 0, 1}, -9999.0f, {-9999, 40});
  ParConfig cfg;
  cfg.release_min_deg = 0;
  EXPECT_EQ(compute_release_mask(s, cfg).flags, (std::vector<std::uint8_t>{0, 1}));
}

TEST(ParConfig, Validation) {
  ParConfig c;
  c.radius_m = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ParConfig{};
  c.release_min_deg = 50;
  c.release_max_deg = 30;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ParConfig{};
  c.release_max_deg = 91;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Par, FlatDemGivesEmptyValue) {
  Raster dem(fixtures::square(10, 20));
  ParConfig cfg;
  cfg.empty_value_deg = -7;
  const auto mask = compute_release_mask(compute_slope(dem), cfg);
  EXPECT_EQ(mask.count(), 0u);
  const Raster bf = par_bruteforce(dem, mask, cfg), fast = par_fast(dem, mask, cfg);
  for (float v : bf.values()) EXPECT_EQ(v, -7.0f);
  for (float v : fast.values()) EXPECT_EQ(v, -7.0f);
}

TEST(Par, SingleReleaseCellAt45) {
  // Release cell 5 cells (100 m) east of p and 100 m higher.
  Raster dem(GridGeometry{8, 1, 0, 0, 20});
  dem.at(0, 6) = 100.0f;
  const auto mask = mask_from(dem.geometry(), {{0, 6}});
  ParConfig cfg;
  cfg.radius_m = 100.0;
  EXPECT_NEAR(par_bruteforce(dem, mask, cfg).at(0, 1), 45.0, 1e-5);
  EXPECT_NEAR(par_fast(dem, mask, cfg).at(0, 1), 45.0, 1e-5);
  EXPECT_EQ(par_fast(dem, mask, cfg).at(0, 0), 0.0f);  // 120 m away: outside the radius
}

TEST(Par, MaximumOfTwoCandidates) {
  Raster dem(GridGeometry{9, 1, 0, 0, 10});
  // p at col 4; candidates at 30 and 42 degrees.
  dem.at(0, 0) = static_cast<float>(40.0 * std::tan(30.0 / kDeg));
  dem.at(0, 8) = static_cast<float>(40.0 * std::tan(42.0 / kDeg));
  const auto mask = mask_from(dem.geometry(), {{0, 0}, {0, 8}});
  EXPECT_NEAR(par_bruteforce(dem, mask, ParConfig{}).at(0, 4), 42.0, 1e-4);
  EXPECT_NEAR(par_fast(dem, mask, ParConfig{}).at(0, 4), 42.0, 1e-4);
}

TEST(Par, SelfIsExcludedAndNegativeKept) {
  Raster dem(GridGeometry{2, 1, 0, 0, 10}, -9999.0f, {100, 90});
  const auto mask = mask_from(dem.geometry(), {{0, 0}, {0, 1}});
  const Raster p = par_bruteforce(dem, mask, ParConfig{});
  EXPECT_NEAR(p.at(0, 0), -45.0, 1e-5);
  EXPECT_NEAR(p.at(0, 1), 45.0, 1e-5);
  expect_par_equal(par_fast(dem, mask, ParConfig{}), p, 0.0);
}

TEST(Par, FastEqualsBruteForceOnRandomDems) {
  Rng rng(2024);
  for (int t = 0; t < 12; ++t) {
    const std::size_t n = 16 + rng.below(64);
    const double cell = rng.uniform(5, 30);
    const Raster dem = fixtures::hilly_dem(n, cell, rng);
    const ParConfig cfg = random_config(rng, cell, n);
    const auto mask = compute_release_mask(compute_slope(dem), cfg);
    expect_par_equal(par_fast(dem, mask, cfg), par_bruteforce(dem, mask, cfg), 1e-6);
  }
}

TEST(Par, FastOnSparseRandomMask) {
  Rng rng(5);
  const Raster dem = fixtures::random_raster(fixtures::square(70, 20), rng, 0, 2000);
  ReleaseMask mask{dem.geometry(), std::vector<std::uint8_t>(dem.geometry().cells(), 0)};
  for (auto& f : mask.flags) f = rng.bernoulli(0.01);
  ParConfig cfg;
  cfg.radius_m = 500;
  expect_par_equal(par_fast(dem, mask, cfg), par_bruteforce(dem, mask, cfg), 1e-6);
}

TEST(Par, MonotoneInReleaseSet) {
  Rng rng(8);
  const Raster dem = fixtures::hilly_dem(40, 20, rng);
  ParConfig cfg;
  cfg.empty_value_deg = -90;
  ReleaseMask small{dem.geometry(), std::vector<std::uint8_t>(dem.geometry().cells(), 0)};
  for (auto& f : small.flags) f = rng.bernoulli(0.05);
  ReleaseMask big = small;
  for (auto& f : big.flags) f = f || rng.bernoulli(0.05);
  const Raster a = par_fast(dem, small, cfg), b = par_fast(dem, big, cfg);
  for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_GE(b.values()[i], a.values()[i]);
}

TEST(Par, OffsetInvariance) {
  Rng rng(9);
  const Raster dem = fixtures::hilly_dem(40, 20, rng);
  Raster shifted = dem;
  for (auto& v : shifted.values()) v += 512.0f;
  const ParConfig cfg;
  const auto mask = compute_release_mask(compute_slope(dem), cfg);
  expect_par_equal(par_fast(shifted, mask, cfg), par_fast(dem, mask, cfg), 1e-4);
}

TEST(Par, ScaleInvariance) {
  Rng rng(10);
  const Raster dem = fixtures::hilly_dem(40, 20, rng);
  Raster scaled(fixtures::square(40, 40));
  for (std::size_t i = 0; i < dem.values().size(); ++i) scaled.values()[i] = 2.0f * dem.values()[i];
  ParConfig cfg, cfg2;
  cfg2.radius_m = 2 * cfg.radius_m;
  const auto mask = compute_release_mask(compute_slope(dem), cfg);
  ReleaseMask mask2{scaled.geometry(), mask.flags};
  expect_par_equal(par_fast(scaled, mask2, cfg2), par_fast(dem, mask, cfg), 1e-4);
}

TEST(Par, GeometryMismatch) {
  Raster dem(fixtures::square(8));
  ReleaseMask m{fixtures::square(9), std::vector<std::uint8_t>(81, 0)};
  EXPECT_THROW(par_fast(dem, m, ParConfig{}), GeometryError);
  EXPECT_THROW(par_bruteforce(dem, m, ParConfig{}), GeometryError);
}

TEST(Histogram, AllBackground) {
  Raster f(GridGeometry{3, 1, 0, 0, 1}, -9999.0f, {1, 2, 3});
  Raster l(f.geometry(), -9999.0f, {0, 0, 0});
  const auto h = class_histograms(f, l, 1.0);
  for (auto c : h.counts_avalanche) EXPECT_EQ(c, 0u);
  EXPECT_EQ(h.counts_avalanche.size() + 1, h.bin_edges.size());
}

TEST(Histogram, HandBinned) {
  // Values 0.5, 1.5, 1.7, 3.2 with labels 1, 0, 1, 0 and width 1: bins [0,1) [1,2) [2,3) [3,4).
  Raster f(GridGeometry{4, 1, 0, 0, 1}, -9999.0f, {0.5f, 1.5f, 1.7f, 3.2f});
  Raster l(f.geometry(), -9999.0f, {1, 0, 1, 0});
  const auto h = class_histograms(f, l, 1.0);
  EXPECT_EQ(h.bin_edges, (std::vector<double>{0, 1, 2, 3, 4}));
  EXPECT_EQ(h.counts_avalanche, (std::vector<std::uint64_t>{1, 1, 0, 0}));
  EXPECT_EQ(h.counts_background, (std::vector<std::uint64_t>{0, 1, 0, 1}));
  EXPECT_EQ(histogram_csv(h),
            "bin_lo,bin_hi,avalanche,background\n0,1,0.5,0\n1,2,0.5,0.5\n2,3,0,0\n3,4,0,0.5\n");
}

TEST(Histogram, ConservationAndNodata) {
  Rng rng(4);
  Raster f = fixtures::random_raster(fixtures::square(20), rng, -10, 60);
  f.at(0, 0) = f.nodata();
  const Raster l = fixtures::random_mask(f.geometry(), rng, 0.3);
  const auto h = class_histograms(f, l, 2.5);
  std::uint64_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < l.values().size(); ++i) {
    if (i == 0) continue;
    (l.values()[i] == 1.0f ? pos : neg) += 1;
  }
  std::uint64_t sa = 0, sb = 0;
  for (auto c : h.counts_avalanche) sa += c;
  for (auto c : h.counts_background) sb += c;
  EXPECT_EQ(sa, pos);
  EXPECT_EQ(sb, neg);
}

TEST(Histogram, Errors) {
  Raster f(GridGeometry{2, 1, 0, 0, 1}, -9999.0f, {1, 2});
  EXPECT_THROW(class_histograms(f, Raster(GridGeometry{2, 1, 0, 0, 1}, -9999.0f, {0, 2}), 1.0), ConfigError);
  EXPECT_THROW(class_histograms(f, Raster(GridGeometry{1, 2, 0, 0, 1}, -9999.0f, {0, 1}), 1.0), GeometryError);
}
