#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "avaseg/raster.hpp"
#include "avaseg/tensor.hpp"

namespace avaseg::sarprep {

inline constexpr float kClipLowDb = -25.0f;
inline constexpr float kClipHighDb = -5.0f;
/// Largest possible change between two clipped acquisitions.
inline constexpr float kMaxDiffDb = kClipHighDb - kClipLowDb;

/// Model input channels; the order is part of the on-disk contract.
enum class Channel : std::size_t { vv = 0, vh = 1, vvvh = 2, slope = 3, par = 4 };
inline constexpr std::size_t kChannelCount = 5;
inline constexpr std::array<const char*, kChannelCount> kChannelNames = {"vv", "vh", "vvvh", "slope", "par"};

Channel channel_from_name(const std::string& name);

/// One acquisition in a scene manifest.
struct SceneRecord {
  std::string id;
  std::string orbit;
  std::string timestamp;  // ISO-8601, e.g. 2017-01-31T05:12:00Z
  std::string vv_path;
  std::string vh_path;
  std::string dem_path;     // optional
  std::string labels_path;  // optional; labels drawn on this (activity) scene
};

struct SceneRecordPair {
  SceneRecord reference;
  SceneRecord activity;
};

/// Calibrated dB rasters of a chronological reference/activity pair.
struct ScenePair {
  SceneRecord reference;
  SceneRecord activity;
  Raster vv_ref, vv_act, vh_ref, vh_act;

  const GridGeometry& geometry() const { return vv_ref.geometry(); }
  /// Shared geometry, same orbit, reference strictly before activity.
  void validate() const;
};

struct FeatureStack {
  std::array<Raster, kChannelCount> channels;

  const Raster& operator[](Channel c) const { return channels[static_cast<std::size_t>(c)]; }
  const GridGeometry& geometry() const { return channels[0].geometry(); }

  /// (1, 5, nrows, ncols) tensor of a window.
  Tensor32 window(std::size_t row0, std::size_t col0, std::size_t height, std::size_t width) const;
};

struct PatchSample {
  Tensor32 features;  // (5, S, S)
  Tensor32 labels;    // (1, S, S), values in {0, 1}
  std::string scene;
  std::size_t row = 0;
  std::size_t col = 0;
  GridGeometry geometry;  // georeferenced window
};

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major, top row first
};

Raster clip_db(const Raster& r);
Raster rescale01(const Raster& r, float lo, float hi);
/// (act - ref) mapped from [-20, +20] dB to [0, 1].
Raster diff_channel(const Raster& act, const Raster& ref);
Raster vvvh_product(const Raster& vv, const Raster& vh);

/// Chains consecutive acquisitions per orbit into (reference, activity) pairs.
/// Groups are emitted in orbit order, pairs in time order.
std::vector<SceneRecordPair> pair_scenes(const std::vector<SceneRecord>& scenes);

ScenePair load_scene_pair(const SceneRecordPair& records);

FeatureStack build_feature_stack(const ScenePair& pair, const Raster& slope, const Raster& par);

RgbImage rgb_composite(const ScenePair& pair);
/// Paints the boundary pixels of `mask` in yellow.
void draw_mask_contours(RgbImage& image, const Raster& mask);
void write_png(const RgbImage& image, const std::filesystem::path& path);

/// Non-overlapping SxS tiles; optionally only tiles with an avalanche pixel.
std::vector<PatchSample> extract_training_patches(const FeatureStack& stack, const Raster& labels, std::size_t size,
                                                  bool require_positive, const std::string& scene_id = "scene");

std::vector<SceneRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<SceneRecord>& scenes, const std::filesystem::path& path);

/// Per-channel binary rasters `<prefix>_<channel>.rst`.
void write_feature_stack(const FeatureStack& stack, const std::filesystem::path& dir, const std::string& prefix);
FeatureStack read_feature_stack(const std::filesystem::path& dir, const std::string& prefix);

struct PatchArchiveEntry {
  PatchSample sample;
  std::string split;  // "train" or "val"
};

/// Writes `<scene>_<row>_<col>_<channel>.rst`, `<scene>_<row>_<col>_label.rst`
/// and an `index.json` listing every sample.
void write_patch_archive(const std::vector<PatchArchiveEntry>& entries, const std::filesystem::path& dir);
std::vector<PatchArchiveEntry> read_patch_archive(const std::filesystem::path& dir);

}  // namespace avaseg::sarprep
