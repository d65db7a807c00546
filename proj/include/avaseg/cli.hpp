#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "avaseg/eval.hpp"
#include "avaseg/model.hpp"
#include "avaseg/topo.hpp"
#include "avaseg/train.hpp"

namespace avaseg::cli {

struct InferConfig {
  std::size_t window = 160;
  std::size_t stride = 80;
  bool tta = true;
  double threshold = 0.5;
};

/// Aggregated configuration of a pipeline run. Every section is optional;
/// unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 7;
  std::string patches;        // patch archive directory
  std::string scene;          // scene manifest for inference / evaluation
  nn::ModelConfig model = nn::ModelConfig::desk();
  train::TrainConfig train;   // includes loss, optimizer and augmentation
  topo::ParConfig par;
  InferConfig infer;
  double min_iou = 0.0;

  void validate() const;
  std::string to_json() const;
  /// Relative data paths are resolved against `base_dir`.
  static RunConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
};

/// A scene ready for inference: features, optional labels and the SAR pair.
struct SceneData {
  sarprep::ScenePair pair;
  sarprep::FeatureStack stack;
  std::optional<Raster> labels;
};

/// Loads the `pair_index`-th reference/activity pair of a manifest, computing
/// slope and PAR from the DEM referenced by the records.
SceneData load_scene(const std::filesystem::path& manifest, const topo::ParConfig& par, std::size_t pair_index = 0,
                     bool downsample = false);

/// Train and validation splits of a patch archive.
train::Dataset load_patch_dataset(const std::filesystem::path& dir);

struct ExperimentResult {
  train::TrainResult training;
  Raster soft;
  Raster mask;
  std::optional<eval::EvalReport> report;
};

/// Builds, trains, infers on the scene and evaluates against its labels.
ExperimentResult run_experiment(const RunConfig& cfg, const train::Dataset& data, const SceneData& scene);

struct AblationRow {
  std::string name;
  nn::ModelConfig model;
  /// VV, VH, VVVH, Slope, PAR, PAR (attn.)
  std::array<bool, 6> marks{};
};

/// The six channel configurations, from VV alone to the full attention model.
std::vector<AblationRow> ablation_rows(const nn::ModelConfig& base);

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<std::vector<double>> f1;  // per row, per seed
};

double mean(const std::vector<double>& v);
/// Sample standard deviation (0 for fewer than two values).
double stddev(const std::vector<double>& v);

std::string ablation_markdown(const AblationTable& table);
std::string ablation_csv(const AblationTable& table);

/// Runs every (row, seed) pair; per-run seeds derive from (base seed, row, seed index).
/// Each finished run is appended to `runs_csv` when given.
AblationTable run_ablation(const RunConfig& cfg, const train::Dataset& data, const SceneData& scene, std::size_t seeds,
                           const std::filesystem::path& runs_csv = {});

/// Entry point of the `avaseg` executable (arguments exclude the program name).
/// Returns 0 on success, 1 on configuration errors, 2 on runtime errors.
int run_command(const std::vector<std::string>& args);

}  // namespace avaseg::cli
