#include "avaseg/raster.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "avaseg/bytes.hpp"
#include "avaseg/error.hpp"

namespace avaseg {

namespace bytes {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace bytes

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'S', 'T', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
std::string shortest(T v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string describe(const GridGeometry& g) {
  std::ostringstream os;
  os << g.ncols << "x" << g.nrows << " @ (" << g.x_origin << ", " << g.y_origin << ") cell " << g.cell_size;
  return os.str();
}

void require_same_geometry(const GridGeometry& a, const GridGeometry& b, const std::string& what) {
  if (!(a == b)) throw GeometryError("geometry mismatch for " + what + ": " + describe(b) + " vs " + describe(a));
}

Raster::Raster(GridGeometry geometry, float nodata) : Raster(geometry, nodata, std::vector<float>(geometry.cells(), 0.0f)) {}

Raster::Raster(GridGeometry geometry, float nodata, std::vector<float> values)
    : geometry_(geometry), nodata_(nodata), values_(std::move(values)) {
  if (!(geometry_.cell_size > 0.0)) throw GeometryError("cell_size must be positive, got " + shortest(geometry_.cell_size));
  if (values_.size() != geometry_.cells())
    throw GeometryError("raster value count " + std::to_string(values_.size()) + " does not match " +
                        std::to_string(geometry_.ncols) + "x" + std::to_string(geometry_.nrows));
}

bool Raster::operator==(const Raster& o) const {
  if (!(geometry_ == o.geometry_)) return false;
  if (std::bit_cast<std::uint32_t>(nodata_) != std::bit_cast<std::uint32_t>(o.nodata_)) return false;
  return std::equal(values_.begin(), values_.end(), o.values_.begin(), o.values_.end(), [](float a, float b) {
    return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
  });
}

RasterFormat format_for_path(const std::filesystem::path& path) {
  return lower(path.extension().string()) == ".asc" ? RasterFormat::ascii_grid : RasterFormat::binary_grid;
}

std::string encode_ascii(const Raster& r) {
  const auto& g = r.geometry();
  std::string out;
  out += "ncols " + std::to_string(g.ncols) + "\n";
  out += "nrows " + std::to_string(g.nrows) + "\n";
  out += "xllcorner " + shortest(g.x_origin) + "\n";
  out += "yllcorner " + shortest(g.y_origin) + "\n";
  out += "cellsize " + shortest(g.cell_size) + "\n";
  out += "NODATA_value " + shortest(r.nodata()) + "\n";
  for (std::size_t row = 0; row < g.nrows; ++row) {
    for (std::size_t col = 0; col < g.ncols; ++col) {
      if (col) out += ' ';
      out += shortest(r.at(row, col));
    }
    out += '\n';
  }
  return out;
}

Raster decode_ascii(const std::string& text) {
  static const std::array<const char*, 6> keys = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};
  std::istringstream in(text);
  std::array<std::string, 6> fields;
  std::string line;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!std::getline(in, line)) throw ParseError("ASCII grid: missing header line " + std::to_string(i + 1) + " (" + keys[i] + ")");
    std::istringstream ls(line);
    std::string key, value, extra;
    ls >> key >> value;
    if (key.empty() || value.empty() || (ls >> extra) || lower(key) != keys[i])
      throw ParseError("ASCII grid: malformed header at line " + std::to_string(i + 1) + ": '" + line + "' (expected " +
                       keys[i] + ")");
    fields[i] = value;
  }
  auto bad = [&](std::size_t i) {
    return ParseError("ASCII grid: malformed header at line " + std::to_string(i + 1) + ": bad value '" + fields[i] + "'");
  };
  GridGeometry g;
  float nodata = 0;
  if (!parse_number(fields[0], g.ncols)) throw bad(0);
  if (!parse_number(fields[1], g.nrows)) throw bad(1);
  if (!parse_number(fields[2], g.x_origin)) throw bad(2);
  if (!parse_number(fields[3], g.y_origin)) throw bad(3);
  if (!parse_number(fields[4], g.cell_size) || !(g.cell_size > 0)) throw bad(4);
  if (!parse_number(fields[5], nodata)) throw bad(5);

  std::vector<float> values;
  values.reserve(g.cells());
  std::string token;
  while (in >> token) {
    float v = 0;
    if (!parse_number(token, v)) throw ParseError("ASCII grid: bad value '" + token + "' at cell " + std::to_string(values.size()));
    values.push_back(v);
  }
  if (values.size() < g.cells())
    throw ParseError("ASCII grid: truncated data, header declares " + std::to_string(g.cells()) + " cells but found " +
                     std::to_string(values.size()));
  if (values.size() > g.cells())
    throw ParseError("ASCII grid: " + std::to_string(values.size()) + " values present, header declares " +
                     std::to_string(g.cells()));
  return Raster(g, nodata, std::move(values));
}

std::vector<std::uint8_t> encode_binary(const Raster& r) {
  const auto& g = r.geometry();
  std::vector<std::uint8_t> out;
  out.reserve(40 + 4 * g.cells());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  bytes::put_u32(out, kVersion);
  bytes::put_u32(out, static_cast<std::uint32_t>(g.ncols));
  bytes::put_u32(out, static_cast<std::uint32_t>(g.nrows));
  bytes::put_f64(out, g.x_origin);
  bytes::put_f64(out, g.y_origin);
  bytes::put_f64(out, g.cell_size);
  bytes::put_f32(out, r.nodata());
  for (float v : r.values()) bytes::put_f32(out, v);
  return out;
}

Raster decode_binary(std::span<const std::uint8_t> data) {
  bytes::Reader in(data);
  auto magic = in.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw ParseError("binary grid: bad magic (expected RSTR)");
  const auto version = in.u32("version");
  if (version != kVersion) throw ParseError("binary grid: unsupported version " + std::to_string(version));
  GridGeometry g;
  g.ncols = in.u32("ncols");
  g.nrows = in.u32("nrows");
  g.x_origin = in.f64("xllcorner");
  g.y_origin = in.f64("yllcorner");
  g.cell_size = in.f64("cellsize");
  const float nodata = in.f32("nodata");
  if (!(g.cell_size > 0)) throw ParseError("binary grid: non-positive cellsize");
  if (in.remaining() != 4 * g.cells())
    throw ParseError("binary grid: truncated data, header declares " + std::to_string(g.cells()) + " cells but " +
                     std::to_string(in.remaining()) + " payload bytes present");
  std::vector<float> values(g.cells());
  for (auto& v : values) v = in.f32("values");
  return Raster(g, nodata, std::move(values));
}

Raster read_raster(const std::filesystem::path& path, RasterFormat format) {
  if (!std::filesystem::exists(path)) throw IoError("raster file not found: " + path.string());
  auto data = bytes::read_file(path.string());
  try {
    if (format == RasterFormat::ascii_grid) return decode_ascii(std::string(data.begin(), data.end()));
    return decode_binary(data);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Raster read_raster(const std::filesystem::path& path) { return read_raster(path, format_for_path(path)); }

void write_raster(const Raster& r, const std::filesystem::path& path, RasterFormat format) {
  if (format == RasterFormat::ascii_grid) {
    auto text = encode_ascii(r);
    bytes::write_file(path.string(), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  } else {
    bytes::write_file(path.string(), encode_binary(r));
  }
}

void write_raster(const Raster& r, const std::filesystem::path& path) { write_raster(r, path, format_for_path(path)); }

Raster crop(const Raster& r, std::size_t col0, std::size_t row0, std::size_t width, std::size_t height) {
  const auto& g = r.geometry();
  if (width == 0 || height == 0 || col0 + width > g.ncols || row0 + height > g.nrows)
    throw GeometryError("crop window cols [" + std::to_string(col0) + ", " + std::to_string(col0 + width) + ") rows [" +
                        std::to_string(row0) + ", " + std::to_string(row0 + height) + ") exceeds grid " +
                        std::to_string(g.ncols) + "x" + std::to_string(g.nrows));
  GridGeometry out = g;
  out.ncols = width;
  out.nrows = height;
  out.x_origin = g.x_origin + static_cast<double>(col0) * g.cell_size;
  out.y_origin = g.y_origin + static_cast<double>(g.nrows - (row0 + height)) * g.cell_size;
  std::vector<float> values;
  values.reserve(width * height);
  for (std::size_t row = row0; row < row0 + height; ++row) {
    auto src = r.values().subspan(row * g.ncols + col0, width);
    values.insert(values.end(), src.begin(), src.end());
  }
  return Raster(out, r.nodata(), std::move(values));
}

Raster downsample2(const Raster& r) {
  const auto& g = r.geometry();
  if (g.ncols % 2 != 0 || g.nrows % 2 != 0)
    throw GeometryError("downsample2 requires even dimensions, got " + std::to_string(g.ncols) + "x" + std::to_string(g.nrows));
  GridGeometry out = g;
  out.ncols = g.ncols / 2;
  out.nrows = g.nrows / 2;
  out.cell_size = g.cell_size * 2.0;
  Raster result(out, r.nodata());
  for (std::size_t row = 0; row < out.nrows; ++row) {
    for (std::size_t col = 0; col < out.ncols; ++col) {
      const float a = r.at(2 * row, 2 * col), b = r.at(2 * row, 2 * col + 1);
      const float c = r.at(2 * row + 1, 2 * col), d = r.at(2 * row + 1, 2 * col + 1);
      if (r.is_nodata(a) || r.is_nodata(b) || r.is_nodata(c) || r.is_nodata(d)) {
        result.at(row, col) = r.nodata();
      } else {
        result.at(row, col) = static_cast<float>((static_cast<double>(a) + b + c + d) / 4.0);
      }
    }
  }
  return result;
}

}  // namespace avaseg
