#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "avaseg/bytes.hpp"
#include "avaseg/error.hpp"
#include "avaseg/raster.hpp"
#include "support.hpp"

using namespace avaseg;

namespace {

Raster grid_2x2() { return Raster(GridGeometry{2, 2, 0.0, 0.0, 20.0}, -9999.0f, {1, 2, 3, 4}); }

Raster golden_3x2() {
  return Raster(GridGeometry{3, 2, 100.5, -20.25, 10.0}, -9999.0f, {1.0f, -2.5f, 0.5f, 3.25f, -9999.0f, 7.0f});
}

std::string read_text(const std::filesystem::path& p) {
  const auto b = bytes::read_file(p);
  return std::string(b.begin(), b.end());
}

}  // namespace

TEST(Raster, AsciiTwoByTwoParsesTopRowFirst) {
  const Raster r = decode_ascii("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 20\nNODATA_value -9999\n1 2\n3 4\n");
  EXPECT_EQ(r.ncols(), 2u);
  EXPECT_EQ(r.nrows(), 2u);
  EXPECT_EQ(std::vector<float>(r.values().begin(), r.values().end()), (std::vector<float>{1, 2, 3, 4}));
  EXPECT_EQ(r.at(0, 1), 2.0f);
}

TEST(Raster, AsciiTruncationIsReported) {
  try {
    decode_ascii("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 20\nNODATA_value -9999\n1 2\n3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(Raster, AsciiMalformedHeaderNamesLine) {
  try {
    decode_ascii("ncols 2\nnrows 2\nxll 0\nyllcorner 0\ncellsize 20\nNODATA_value -9999\n1 2\n3 4\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Raster, AsciiHalfIsWrittenExactly) {
  Raster r(GridGeometry{1, 1, 0, 0, 1}, -9999.0f, {0.5f});
  const std::string text = encode_ascii(r);
  EXPECT_NE(text.find("\n0.5\n"), std::string::npos);
  EXPECT_NE(text.find("NODATA_value -9999\n"), std::string::npos);
  EXPECT_EQ(decode_ascii(text).at(0, 0), 0.5f);
}

TEST(Raster, RoundTripRandomBothFormats) {
  Rng rng(11);
  auto dir = fixtures::temp_dir("raster_rt");
  for (int t = 0; t < 10; ++t) {
    GridGeometry g{1 + rng.below(20), 1 + rng.below(20), rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6),
                   rng.uniform(0.1, 100)};
    Raster r(g, static_cast<float>(rng.uniform(-1e4, 0)));
    for (auto& v : r.values()) v = static_cast<float>(rng.normal(0, 1000));
    for (const char* ext : {".asc", ".rst"}) {
      const auto path = dir / (std::to_string(t) + ext);
      write_raster(r, path);
      const Raster back = read_raster(path);
      EXPECT_TRUE(back == r) << ext;
      EXPECT_EQ(back.geometry(), r.geometry());
      EXPECT_EQ(back.nodata(), r.nodata());
    }
  }
}

TEST(Raster, BinaryRewriteIsBitIdentical) {
  auto dir = fixtures::temp_dir("raster_rewrite");
  write_raster(golden_3x2(), dir / "a.rst");
  write_raster(read_raster(dir / "a.rst"), dir / "b.rst");
  EXPECT_EQ(bytes::read_file(dir / "a.rst"), bytes::read_file(dir / "b.rst"));
}

TEST(Raster, BinaryMatchesGoldenFile) {
  const auto golden = bytes::read_file(std::filesystem::path(AVASEG_GOLDEN_DIR) / "raster_3x2.rst");
  EXPECT_EQ(encode_binary(golden_3x2()), golden);
  EXPECT_TRUE(decode_binary(golden) == golden_3x2());
}

TEST(Raster, AsciiMatchesGoldenFile) {
  const std::string golden = read_text(std::filesystem::path(AVASEG_GOLDEN_DIR) / "raster_3x2.asc");
  EXPECT_EQ(encode_ascii(golden_3x2()), golden);
}

TEST(Raster, BinaryTruncationAndMagicErrors) {
  auto bytes = encode_binary(golden_3x2());
  bytes.pop_back();
  EXPECT_THROW(decode_binary(bytes), ParseError);
  bytes = encode_binary(golden_3x2());
  bytes[0] = 'X';
  EXPECT_THROW(decode_binary(bytes), ParseError);
}

TEST(Raster, UnwritablePathIsIoError) {
  EXPECT_THROW(write_raster(grid_2x2(), "/nonexistent_dir_avaseg/x.rst"), IoError);
}

TEST(Raster, InvariantsEnforced) {
  EXPECT_THROW(Raster(GridGeometry{2, 2, 0, 0, 0.0}), GeometryError);
  EXPECT_THROW(Raster(GridGeometry{2, 2, 0, 0, 1.0}, -9999.0f, {1, 2, 3}), GeometryError);
}

TEST(Raster, CropFullExtentIsIdentity) { EXPECT_TRUE(crop(grid_2x2(), 0, 0, 2, 2) == grid_2x2()); }

TEST(Raster, CropTopLeftCell) {
  const Raster c = crop(grid_2x2(), 0, 0, 1, 1);
  EXPECT_EQ(c.at(0, 0), 1.0f);
  EXPECT_EQ(c.geometry().y_origin, 20.0);
  EXPECT_EQ(c.geometry().x_origin, 0.0);
}

TEST(Raster, CropOriginShifts) {
  const Raster r = grid_2x2();
  EXPECT_EQ(crop(r, 0, 1, 2, 1).geometry().y_origin, 0.0);   // drop the top row
  EXPECT_EQ(crop(r, 0, 0, 2, 1).geometry().y_origin, 20.0);  // drop the bottom row
  EXPECT_EQ(crop(r, 1, 0, 1, 2).geometry().x_origin, 20.0);
}

TEST(Raster, CropOutOfBoundsNamesExtents) {
  try {
    crop(grid_2x2(), 1, 0, 2, 2);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_NE(std::string(e.what()).find("2x2"), std::string::npos) << e.what();
  }
}

TEST(Raster, Downsample2Mean) {
  const Raster d = downsample2(grid_2x2());
  ASSERT_EQ(d.values().size(), 1u);
  EXPECT_EQ(d.at(0, 0), 2.5f);
  EXPECT_EQ(d.cell_size(), 40.0);
}

TEST(Raster, Downsample2ConstantAndNodata) {
  Raster r(GridGeometry{4, 4, 0, 0, 10}, -9999.0f, std::vector<float>(16, 3.0f));
  const Raster d = downsample2(r);
  for (float v : d.values()) EXPECT_EQ(v, 3.0f);
  r.at(0, 1) = -9999.0f;
  const Raster e = downsample2(r);
  EXPECT_EQ(e.at(0, 0), -9999.0f);
  EXPECT_EQ(e.at(1, 1), 3.0f);
  EXPECT_EQ(downsample2(downsample2(r)).cell_size(), 40.0);
}

TEST(Raster, Downsample2OddDimension) {
  EXPECT_THROW(downsample2(Raster(GridGeometry{3, 2, 0, 0, 1})), GeometryError);
}

TEST(Raster, CellCentersOfCorners) {
  const GridGeometry g{4, 3, 100.0, 200.0, 10.0};
  EXPECT_EQ(g.cell_center_x(0), 105.0);
  EXPECT_EQ(g.cell_center_y(0), 225.0);
  EXPECT_EQ(g.cell_center_x(3), 135.0);
  EXPECT_EQ(g.cell_center_y(2), 205.0);
}

TEST(Raster, GeometryMismatchIsReported) {
  EXPECT_THROW(require_same_geometry(GridGeometry{2, 2, 0, 0, 1}, GridGeometry{2, 2, 0, 0, 2}, "x"), GeometryError);
  EXPECT_NO_THROW(require_same_geometry(GridGeometry{2, 2, 0, 0, 1}, GridGeometry{2, 2, 0, 0, 1}, "x"));
}
