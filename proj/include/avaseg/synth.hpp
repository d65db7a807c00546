#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "avaseg/sarprep.hpp"
#include "avaseg/topo.hpp"

namespace avaseg::synth {

struct SynthConfig {
  std::size_t size = 512;
  double cell_size = 20.0;
  double relief_amplitude = 3000.0;  // meters, lowest to highest point
  double roughness = 2.2;            // amplitude spectrum decays as k^-roughness
  double valley_exponent = 2.0;      // heights are relief * u^exponent, u in [0, 1]
  std::size_t n_avalanches = 12;
  /// Change blobs planted outside the avalanche predicate (not labeled).
  std::size_t n_distractors = 0;
  double debris_gain_db = 6.0;
  double noise_db = 1.5;
  std::uint64_t seed = 7;

  void validate() const;
};

Raster synth_dem(const SynthConfig& cfg);

/// Smooth field of the config's size scaled to [lo, hi].
Raster smooth_field(const SynthConfig& cfg, double roughness, double lo, double hi, std::uint64_t seed);

struct SynthScene {
  sarprep::ScenePair pair;
  Raster labels;
  Raster slope;
  Raster par;
  std::size_t planted = 0;
  std::size_t distractors = 0;
};

/// Debris predicate used for placement: slope in [5, 30] degrees and PAR above
/// the scene median.
inline constexpr double kDebrisSlopeMinDeg = 5.0;
inline constexpr double kDebrisSlopeMaxDeg = 30.0;
/// Blob centers lie within this many cells of a release cell.
inline constexpr std::size_t kRunoutReachCells = 4;
/// ... and have PAR at or above this scene quantile.
inline constexpr double kCenterParQuantile = 0.75;

SynthScene synth_scene_pair(const SynthConfig& cfg, const Raster& dem, const std::string& scene_id = "scene");

/// Order statistic at floor(q * (n - 1)) of the raster values.
float quantile(const Raster& r, double q);

struct DatasetSummary {
  std::size_t scenes = 0;
  std::size_t planted = 0;
  std::size_t train_patches = 0;
  std::size_t validation_patches = 0;
};

/// Writes under `out`:
///   scenes/<id>_{ref,act}_{vv,vh}.rst, <id>_dem.rst, <id>_labels.rst
///   features/<activity id>_<channel>.rst
///   manifest.json (all but the last scene), test_manifest.json (last scene)
///   patches/ archive of positive patches from the training scenes, 90/10 train/val.
DatasetSummary synth_dataset(const SynthConfig& cfg, std::size_t n_scenes, const std::filesystem::path& out,
                             std::size_t patch_size = 64, double validation_fraction = 0.1);

}  // namespace avaseg::synth
