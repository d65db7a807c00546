#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace avaseg {

/// Grid placement shared by every raster on the working grid. Origin is the
/// lower-left corner in map meters; row 0 is the top row.
struct GridGeometry {
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  double x_origin = 0.0;
  double y_origin = 0.0;
  double cell_size = 1.0;

  std::size_t cells() const { return ncols * nrows; }

  /// World coordinates of the center of cell (row, col).
  double cell_center_x(std::size_t col) const { return x_origin + (static_cast<double>(col) + 0.5) * cell_size; }
  double cell_center_y(std::size_t row) const {
    return y_origin + (static_cast<double>(nrows - row) - 0.5) * cell_size;
  }

  bool operator==(const GridGeometry&) const = default;
};

std::string describe(const GridGeometry& g);

/// Throws GeometryError naming `what` when the two geometries differ.
void require_same_geometry(const GridGeometry& a, const GridGeometry& b, const std::string& what);

/// Georeferenced grid of 32-bit values, row-major, top row first.
class Raster {
 public:
  static constexpr float kDefaultNodata = -9999.0f;

  Raster() = default;
  Raster(GridGeometry geometry, float nodata = kDefaultNodata);
  Raster(GridGeometry geometry, float nodata, std::vector<float> values);

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t ncols() const { return geometry_.ncols; }
  std::size_t nrows() const { return geometry_.nrows; }
  double cell_size() const { return geometry_.cell_size; }
  float nodata() const { return nodata_; }

  bool is_nodata(float v) const { return v == nodata_; }

  float at(std::size_t row, std::size_t col) const { return values_[row * geometry_.ncols + col]; }
  float& at(std::size_t row, std::size_t col) { return values_[row * geometry_.ncols + col]; }

  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  bool operator==(const Raster& o) const;

 private:
  GridGeometry geometry_;
  float nodata_ = kDefaultNodata;
  std::vector<float> values_;
};

enum class RasterFormat { ascii_grid, binary_grid };

/// Picks the format from the extension: ".asc" is ASCII, everything else binary.
RasterFormat format_for_path(const std::filesystem::path& path);

Raster read_raster(const std::filesystem::path& path, RasterFormat format);
Raster read_raster(const std::filesystem::path& path);
void write_raster(const Raster& r, const std::filesystem::path& path, RasterFormat format);
void write_raster(const Raster& r, const std::filesystem::path& path);

/// In-memory codecs behind read_raster/write_raster.
std::string encode_ascii(const Raster& r);
Raster decode_ascii(const std::string& text);
std::vector<std::uint8_t> encode_binary(const Raster& r);
Raster decode_binary(std::span<const std::uint8_t> bytes);

/// Exact sub-block; the origin moves with the removed left/bottom margins.
Raster crop(const Raster& r, std::size_t col0, std::size_t row0, std::size_t width, std::size_t height);

/// 2x2 block mean at twice the cell size. Blocks containing nodata become nodata.
Raster downsample2(const Raster& r);

}  // namespace avaseg
