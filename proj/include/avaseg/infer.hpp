#pragma once

#include <array>
#include <functional>
#include <vector>

#include "avaseg/model.hpp"
#include "avaseg/sarprep.hpp"

namespace avaseg::infer {

/// Element of the dihedral group of the square: `quarter_turns`
/// counter-clockwise rotations applied after an optional horizontal flip.
struct TtaTransform {
  int quarter_turns = 0;  // 0..3
  bool flip = false;

  bool operator==(const TtaTransform&) const = default;
};

/// Identity first, then the remaining seven symmetries.
std::array<TtaTransform, 8> all_transforms();

/// Transforms the last two (square) axes of a tensor.
Tensor32 apply_tta(const TtaTransform& t, const Tensor32& x);
Tensor32 invert_tta(const TtaTransform& t, const Tensor32& y);

struct WindowOffset {
  std::size_t row = 0;
  std::size_t col = 0;

  bool operator==(const WindowOffset&) const = default;
};

/// Offsets 0, stride, 2*stride, ... along one axis, the last one clamped to n - size.
std::vector<std::size_t> axis_offsets(std::size_t n, std::size_t size, std::size_t stride);

/// Row-major window offsets covering the scene.
std::vector<WindowOffset> tile_windows(const GridGeometry& geometry, std::size_t size, std::size_t stride);

/// Separable quadratic B-spline window; shifted copies at half the window
/// size sum to one.
struct BlendWeights {
  std::size_t size = 0;
  std::vector<double> surface;  // size x size

  static BlendWeights quadratic_spline(std::size_t size);
  double at(std::size_t r, std::size_t c) const { return surface[r * size + c]; }
};

/// 1-D profile of the window at pixel i of n.
double spline_weight(std::size_t i, std::size_t n);

struct WindowPrediction {
  WindowOffset offset;
  Tensor32 soft;  // (S, S) or any shape with S*S elements
};

/// Weighted average of all window predictions per pixel.
Raster blend_predictions(const std::vector<WindowPrediction>& predictions, const BlendWeights& weights,
                         const GridGeometry& geometry);

/// Maps an (N, 5, S, S) batch to (N, 1, S, S) soft masks.
using Predictor = std::function<Tensor32(const Tensor32&)>;

/// Eval-mode forward of a model.
Predictor model_predictor(nn::Model<float>& model);

Raster segment_scene(const Predictor& predictor, const sarprep::FeatureStack& stack, std::size_t size,
                     std::size_t stride, bool use_tta);
Raster segment_scene(nn::Model<float>& model, const sarprep::FeatureStack& stack, std::size_t size,
                     std::size_t stride, bool use_tta);

/// 1 where soft >= tau, else 0.
Raster threshold_mask(const Raster& soft, double tau = 0.5);

}  // namespace avaseg::infer
