#include "avaseg/sarprep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <png.h>
#include <tuple>

#include <json.hpp>

#include "avaseg/error.hpp"

namespace avaseg::sarprep {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename F>
Raster map_values(const Raster& r, F&& f) {
  Raster out(r.geometry(), r.nodata());
  auto in = r.values();
  auto o = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = r.is_nodata(in[i]) ? r.nodata() : f(in[i]);
  return out;
}

template <typename F>
Raster zip_values(const Raster& a, const Raster& b, const std::string& what, F&& f) {
  require_same_geometry(a.geometry(), b.geometry(), what);
  Raster out(a.geometry(), a.nodata());
  auto va = a.values(), vb = b.values();
  auto o = out.values();
  for (std::size_t i = 0; i < va.size(); ++i)
    o[i] = (a.is_nodata(va[i]) || b.is_nodata(vb[i])) ? a.nodata() : f(va[i], vb[i]);
  return out;
}

// ISO-8601 "YYYY-MM-DDTHH:MM:SS[.fff][Z]" as a sortable tuple.
std::tuple<int, int, int, int, int, double> parse_timestamp(const std::string& ts) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double s = 0;
  int n = std::sscanf(ts.c_str(), "%4d-%2d-%2dT%2d:%2d:%lf", &y, &mo, &d, &h, &mi, &s);
  if (n < 3) n = std::sscanf(ts.c_str(), "%4d-%2d-%2d", &y, &mo, &d);
  if (n < 3 || mo < 1 || mo > 12 || d < 1 || d > 31) throw ConfigError("invalid ISO-8601 timestamp '" + ts + "'");
  return {y, mo, d, h, mi, s};
}

std::uint8_t to_byte(float v01) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v01, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

Channel channel_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kChannelCount; ++i)
    if (name == kChannelNames[i]) return static_cast<Channel>(i);
  throw ConfigError("unknown channel '" + name + "' (expected vv, vh, vvvh, slope or par)");
}

void ScenePair::validate() const {
  require_same_geometry(vv_ref.geometry(), vv_act.geometry(), "vv activity");
  require_same_geometry(vv_ref.geometry(), vh_ref.geometry(), "vh reference");
  require_same_geometry(vv_ref.geometry(), vh_act.geometry(), "vh activity");
  if (reference.orbit != activity.orbit)
    throw ConfigError("scene pair mixes orbits '" + reference.orbit + "' and '" + activity.orbit + "'");
  if (!(parse_timestamp(reference.timestamp) < parse_timestamp(activity.timestamp)))
    throw ConfigError("reference " + reference.timestamp + " is not before activity " + activity.timestamp);
}

Tensor32 FeatureStack::window(std::size_t row0, std::size_t col0, std::size_t height, std::size_t width) const {
  const auto& g = geometry();
  if (row0 + height > g.nrows || col0 + width > g.ncols) throw GeometryError("feature window exceeds scene");
  Tensor32 t({1, kChannelCount, height, width});
  for (std::size_t c = 0; c < kChannelCount; ++c)
    for (std::size_t r = 0; r < height; ++r)
      for (std::size_t k = 0; k < width; ++k) t.at(0, c, r, k) = channels[c].at(row0 + r, col0 + k);
  return t;
}

Raster clip_db(const Raster& r) {
  return map_values(r, [](float v) { return std::clamp(v, kClipLowDb, kClipHighDb); });
}

Raster rescale01(const Raster& r, float lo, float hi) {
  if (!(lo < hi)) throw ConfigError("rescale01 requires lo < hi");
  const double span = static_cast<double>(hi) - lo;
  return map_values(r, [&](float v) { return static_cast<float>(std::clamp((v - static_cast<double>(lo)) / span, 0.0, 1.0)); });
}

Raster diff_channel(const Raster& act, const Raster& ref) {
  auto diff = zip_values(act, ref, "difference reference", [](float a, float b) { return a - b; });
  return rescale01(diff, -kMaxDiffDb, kMaxDiffDb);
}

Raster vvvh_product(const Raster& vv, const Raster& vh) {
  return zip_values(vv, vh, "vh channel", [](float a, float b) { return (a * a) * (b * b); });
}

std::vector<SceneRecordPair> pair_scenes(const std::vector<SceneRecord>& scenes) {
  std::map<std::string, std::vector<SceneRecord>> groups;
  for (const auto& s : scenes) {
    parse_timestamp(s.timestamp);
    groups[s.orbit].push_back(s);
  }
  std::vector<SceneRecordPair> pairs;
  for (auto& [orbit, group] : groups) {
    std::stable_sort(group.begin(), group.end(), [](const SceneRecord& a, const SceneRecord& b) {
      return parse_timestamp(a.timestamp) < parse_timestamp(b.timestamp);
    });
    for (std::size_t i = 1; i < group.size(); ++i) pairs.push_back({group[i - 1], group[i]});
  }
  return pairs;
}

ScenePair load_scene_pair(const SceneRecordPair& records) {
  ScenePair p{records.reference,
              records.activity,
              read_raster(records.reference.vv_path),
              read_raster(records.activity.vv_path),
              read_raster(records.reference.vh_path),
              read_raster(records.activity.vh_path)};
  p.validate();
  return p;
}

FeatureStack build_feature_stack(const ScenePair& pair, const Raster& slope, const Raster& par) {
  pair.validate();
  require_same_geometry(pair.geometry(), slope.geometry(), "slope channel");
  require_same_geometry(pair.geometry(), par.geometry(), "par channel");
  Raster vv = diff_channel(clip_db(pair.vv_act), clip_db(pair.vv_ref));
  Raster vh = diff_channel(clip_db(pair.vh_act), clip_db(pair.vh_ref));
  Raster vvvh = vvvh_product(vv, vh);
  return FeatureStack{{std::move(vv), std::move(vh), std::move(vvvh), slope, par}};
}

RgbImage rgb_composite(const ScenePair& pair) {
  require_same_geometry(pair.vv_ref.geometry(), pair.vv_act.geometry(), "vv activity");
  const Raster ref = rescale01(clip_db(pair.vv_ref), kClipLowDb, kClipHighDb);
  const Raster act = rescale01(clip_db(pair.vv_act), kClipLowDb, kClipHighDb);
  RgbImage img{ref.ncols(), ref.nrows(), std::vector<std::uint8_t>(3 * ref.geometry().cells())};
  for (std::size_t i = 0; i < ref.geometry().cells(); ++i) {
    const auto r = to_byte(ref.values()[i]), g = to_byte(act.values()[i]);
    img.rgb[3 * i] = r;
    img.rgb[3 * i + 1] = g;
    img.rgb[3 * i + 2] = r;
  }
  return img;
}

void draw_mask_contours(RgbImage& image, const Raster& mask) {
  if (mask.ncols() != image.width || mask.nrows() != image.height) throw GeometryError("mask and image sizes differ");
  const std::size_t w = image.width, h = image.height;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (mask.at(r, c) != 1.0f) continue;
      const bool edge = r == 0 || c == 0 || r + 1 == h || c + 1 == w || mask.at(r - 1, c) != 1.0f ||
                        mask.at(r + 1, c) != 1.0f || mask.at(r, c - 1) != 1.0f || mask.at(r, c + 1) != 1.0f;
      if (!edge) continue;
      auto* px = &image.rgb[3 * (r * w + c)];
      px[0] = 255;
      px[1] = 255;
      px[2] = 0;
    }
  }
}

void write_png(const RgbImage& image, const fs::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed for '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < image.height; ++r)
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + 3 * r * image.width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<PatchSample> extract_training_patches(const FeatureStack& stack, const Raster& labels, std::size_t size,
                                                  bool require_positive, const std::string& scene_id) {
  if (size == 0 || size % 16 != 0) throw ConfigError("patch size must be a positive multiple of 16, got " + std::to_string(size));
  const auto& g = stack.geometry();
  require_same_geometry(g, labels.geometry(), "labels");
  if (size > std::min(g.ncols, g.nrows))
    throw GeometryError("patch size " + std::to_string(size) + " exceeds scene " + describe(g));
  std::vector<PatchSample> out;
  for (std::size_t row = 0; row + size <= g.nrows; row += size) {
    for (std::size_t col = 0; col + size <= g.ncols; col += size) {
      Tensor32 lab({1, size, size});
      bool positive = false;
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
          const float v = labels.at(row + r, col + c) == 1.0f ? 1.0f : 0.0f;
          lab[r * size + c] = v;
          positive = positive || v == 1.0f;
        }
      if (require_positive && !positive) continue;
      Tensor32 win = stack.window(row, col, size, size);
      PatchSample s;
      s.features = Tensor32({kChannelCount, size, size}, std::vector<float>(win.data().begin(), win.data().end()));
      s.labels = std::move(lab);
      s.scene = scene_id;
      s.row = row;
      s.col = col;
      s.geometry = crop(labels, col, row, size, size).geometry();
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<SceneRecord> read_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("scene manifest not found: " + path.string());
  json doc;
  try {
    std::ifstream in(path);
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("scene manifest " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw ConfigError("scene manifest must be a JSON array: " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) { return p.empty() || fs::path(p).is_absolute() ? p : (base / p).string(); };
  std::vector<SceneRecord> out;
  for (const auto& rec : doc) {
    try {
      SceneRecord s;
      s.id = rec.at("id").get<std::string>();
      s.orbit = rec.at("orbit").get<std::string>();
      s.timestamp = rec.at("timestamp").get<std::string>();
      s.vv_path = resolve(rec.at("vv_path").get<std::string>());
      s.vh_path = resolve(rec.at("vh_path").get<std::string>());
      s.dem_path = resolve(rec.value("dem_path", std::string()));
      s.labels_path = resolve(rec.value("labels_path", std::string()));
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ConfigError("scene manifest " + path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_manifest(const std::vector<SceneRecord>& scenes, const fs::path& path) {
  json doc = json::array();
  for (const auto& s : scenes) {
    json rec = {{"id", s.id}, {"orbit", s.orbit}, {"timestamp", s.timestamp}, {"vv_path", s.vv_path}, {"vh_path", s.vh_path}};
    if (!s.dem_path.empty()) rec["dem_path"] = s.dem_path;
    if (!s.labels_path.empty()) rec["labels_path"] = s.labels_path;
    doc.push_back(std::move(rec));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << doc.dump(2) << "\n";
}

void write_feature_stack(const FeatureStack& stack, const fs::path& dir, const std::string& prefix) {
  fs::create_directories(dir);
  for (std::size_t c = 0; c < kChannelCount; ++c)
    write_raster(stack.channels[c], dir / (prefix + "_" + kChannelNames[c] + ".rst"), RasterFormat::binary_grid);
}

FeatureStack read_feature_stack(const fs::path& dir, const std::string& prefix) {
  FeatureStack s;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    s.channels[c] = read_raster(dir / (prefix + "_" + kChannelNames[c] + ".rst"), RasterFormat::binary_grid);
    require_same_geometry(s.channels[0].geometry(), s.channels[c].geometry(), std::string("channel ") + kChannelNames[c]);
  }
  return s;
}

namespace {

std::string sample_stem(const PatchSample& s) {
  return s.scene + "_" + std::to_string(s.row) + "_" + std::to_string(s.col);
}

Raster plane_raster(const Tensor32& t, std::size_t plane, const GridGeometry& g) {
  const std::size_t n = g.cells();
  if (t.size() < (plane + 1) * n) throw ShapeError("patch tensor smaller than its geometry");
  return Raster(g, Raster::kDefaultNodata, std::vector<float>(t.data().begin() + plane * n, t.data().begin() + (plane + 1) * n));
}

}  // namespace

void write_patch_archive(const std::vector<PatchArchiveEntry>& entries, const fs::path& dir) {
  fs::create_directories(dir);
  json index = {{"channels", kChannelNames}, {"samples", json::array()}};
  for (const auto& e : entries) {
    const auto& s = e.sample;
    const std::string stem = sample_stem(s);
    for (std::size_t c = 0; c < kChannelCount; ++c)
      write_raster(plane_raster(s.features, c, s.geometry), dir / (stem + "_" + kChannelNames[c] + ".rst"),
                   RasterFormat::binary_grid);
    write_raster(plane_raster(s.labels, 0, s.geometry), dir / (stem + "_label.rst"), RasterFormat::binary_grid);
    index["samples"].push_back({{"scene", s.scene}, {"row", s.row}, {"col", s.col}, {"split", e.split}});
  }
  std::ofstream out(dir / "index.json");
  if (!out) throw IoError("cannot write patch index in " + dir.string());
  out << index.dump(2) << "\n";
}

std::vector<PatchArchiveEntry> read_patch_archive(const fs::path& dir) {
  const auto index_path = dir / "index.json";
  if (!fs::exists(index_path)) throw ConfigError("patch index not found: " + index_path.string());
  json index;
  try {
    std::ifstream in(index_path);
    index = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("patch index " + index_path.string() + ": " + e.what());
  }
  std::vector<PatchArchiveEntry> out;
  for (const auto& rec : index.at("samples")) {
    PatchArchiveEntry e;
    e.split = rec.value("split", std::string("train"));
    auto& s = e.sample;
    s.scene = rec.at("scene").get<std::string>();
    s.row = rec.at("row").get<std::size_t>();
    s.col = rec.at("col").get<std::size_t>();
    const std::string stem = sample_stem(s);
    const Raster label = read_raster(dir / (stem + "_label.rst"), RasterFormat::binary_grid);
    s.geometry = label.geometry();
    if (s.geometry.ncols != s.geometry.nrows) throw GeometryError("patch " + stem + " is not square");
    const std::size_t n = s.geometry.ncols;
    s.labels = Tensor32({1, n, n}, std::vector<float>(label.values().begin(), label.values().end()));
    s.features = Tensor32({kChannelCount, n, n});
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const Raster ch = read_raster(dir / (stem + "_" + kChannelNames[c] + ".rst"), RasterFormat::binary_grid);
      require_same_geometry(s.geometry, ch.geometry(), stem + " channel " + kChannelNames[c]);
      std::copy(ch.values().begin(), ch.values().end(), s.features.data().begin() + c * n * n);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace avaseg::sarprep
