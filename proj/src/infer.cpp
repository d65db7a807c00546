#include "avaseg/infer.hpp"

#include <algorithm>

#include "avaseg/error.hpp"

namespace avaseg::infer {

std::array<TtaTransform, 8> all_transforms() {
  std::array<TtaTransform, 8> out;
  for (int i = 0; i < 8; ++i) out[i] = TtaTransform{i % 4, i >= 4};
  return out;
}

namespace {

void check_square(const Tensor32& x) {
  if (x.rank() < 2) throw ShapeError("TTA needs at least two axes, got " + x.shape_string());
  if (x.dim(x.rank() - 1) != x.dim(x.rank() - 2)) throw ShapeError("TTA needs square patches, got " + x.shape_string());
}

// One counter-clockwise quarter turn per plane: out[r][c] = in[c][S-1-r].
Tensor32 rotate(const Tensor32& x, int turns) {
  turns = ((turns % 4) + 4) % 4;
  if (turns == 0) return x;
  const std::size_t s = x.dim(x.rank() - 1), plane = s * s, planes = x.size() / plane;
  Tensor32 out(x.shape());
  for (std::size_t p = 0; p < planes; ++p) {
    const float* in = x.ptr() + p * plane;
    float* o = out.ptr() + p * plane;
    for (std::size_t r = 0; r < s; ++r) {
      for (std::size_t c = 0; c < s; ++c) {
        float v;
        switch (turns) {
          case 1: v = in[c * s + (s - 1 - r)]; break;
          case 2: v = in[(s - 1 - r) * s + (s - 1 - c)]; break;
          default: v = in[(s - 1 - c) * s + r]; break;
        }
        o[r * s + c] = v;
      }
    }
  }
  return out;
}

Tensor32 flip_h(const Tensor32& x) {
  const std::size_t s = x.dim(x.rank() - 1), rows = x.size() / s;
  Tensor32 out(x.shape());
  for (std::size_t r = 0; r < rows; ++r)
    std::reverse_copy(x.ptr() + r * s, x.ptr() + (r + 1) * s, out.ptr() + r * s);
  return out;
}

}  // namespace

Tensor32 apply_tta(const TtaTransform& t, const Tensor32& x) {
  check_square(x);
  return rotate(t.flip ? flip_h(x) : x, t.quarter_turns);
}

Tensor32 invert_tta(const TtaTransform& t, const Tensor32& y) {
  check_square(y);
  Tensor32 r = rotate(y, -t.quarter_turns);
  return t.flip ? flip_h(r) : r;
}

std::vector<std::size_t> axis_offsets(std::size_t n, std::size_t size, std::size_t stride) {
  if (size == 0 || stride == 0) throw ConfigError("window size and stride must be positive");
  if (stride > size) throw ConfigError("stride " + std::to_string(stride) + " exceeds window " + std::to_string(size));
  if (size > n) throw GeometryError("window " + std::to_string(size) + " exceeds scene extent " + std::to_string(n));
  std::vector<std::size_t> out;
  std::size_t off = 0;
  for (; off + size < n; off += stride) out.push_back(off);
  out.push_back(n - size);
  return out;
}

std::vector<WindowOffset> tile_windows(const GridGeometry& geometry, std::size_t size, std::size_t stride) {
  const auto rows = axis_offsets(geometry.nrows, size, stride);
  const auto cols = axis_offsets(geometry.ncols, size, stride);
  std::vector<WindowOffset> out;
  for (auto r : rows)
    for (auto c : cols) out.push_back({r, c});
  return out;
}

double spline_weight(std::size_t i, std::size_t n) {
  const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  if (t < 0.25) return 8.0 * t * t;
  if (t > 0.75) return 8.0 * (1.0 - t) * (1.0 - t);
  return 1.0 - 8.0 * (t - 0.5) * (t - 0.5);
}

BlendWeights BlendWeights::quadratic_spline(std::size_t size) {
  BlendWeights w;
  w.size = size;
  w.surface.resize(size * size);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) w.surface[r * size + c] = spline_weight(r, size) * spline_weight(c, size);
  return w;
}

Raster blend_predictions(const std::vector<WindowPrediction>& predictions, const BlendWeights& weights,
                         const GridGeometry& geometry) {
  const std::size_t s = weights.size;
  std::vector<double> num(geometry.cells(), 0.0), den(geometry.cells(), 0.0);
  for (const auto& p : predictions) {
    if (p.soft.size() != s * s) throw ShapeError("window prediction " + p.soft.shape_string() + " does not match window size");
    if (p.offset.row + s > geometry.nrows || p.offset.col + s > geometry.ncols)
      throw GeometryError("window extends beyond the scene");
    for (std::size_t r = 0; r < s; ++r) {
      const std::size_t base = (p.offset.row + r) * geometry.ncols + p.offset.col;
      for (std::size_t c = 0; c < s; ++c) {
        const double w = weights.at(r, c);
        num[base + c] += w * static_cast<double>(p.soft[r * s + c]);
        den[base + c] += w;
      }
    }
  }
  Raster out(geometry);
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(den[i] > 0)) throw Error("pixel " + std::to_string(i) + " not covered by any window");
    v[i] = static_cast<float>(std::clamp(num[i] / den[i], 0.0, 1.0));
  }
  return out;
}

Predictor model_predictor(nn::Model<float>& model) {
  return [&model](const Tensor32& batch) { return model.forward(batch, nn::Mode::eval); };
}

Raster segment_scene(const Predictor& predictor, const sarprep::FeatureStack& stack, std::size_t size,
                     std::size_t stride, bool use_tta) {
  const auto& geometry = stack.geometry();
  const auto windows = tile_windows(geometry, size, stride);
  const auto transforms = all_transforms();
  const std::size_t n_tta = use_tta ? transforms.size() : 1;
  const std::size_t chw = sarprep::kChannelCount * size * size;

  std::vector<WindowPrediction> predictions;
  predictions.reserve(windows.size());
  for (const auto& w : windows) {
    const Tensor32 x = stack.window(w.row, w.col, size, size);
    Tensor32 batch({n_tta, sarprep::kChannelCount, size, size});
    for (std::size_t t = 0; t < n_tta; ++t) {
      const Tensor32 xt = apply_tta(transforms[t], x);
      std::copy(xt.data().begin(), xt.data().end(), batch.ptr() + t * chw);
    }
    const Tensor32 y = predictor(batch);
    if (y.size() != n_tta * size * size) throw ShapeError("predictor returned " + y.shape_string());
    std::vector<double> acc(size * size, 0.0);
    for (std::size_t t = 0; t < n_tta; ++t) {
      Tensor32 yt({1, 1, size, size}, std::vector<float>(y.ptr() + t * size * size, y.ptr() + (t + 1) * size * size));
      const Tensor32 inv = invert_tta(transforms[t], yt);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += inv[i];
    }
    Tensor32 soft({size, size});
    for (std::size_t i = 0; i < acc.size(); ++i) soft[i] = static_cast<float>(acc[i] / static_cast<double>(n_tta));
    predictions.push_back({w, std::move(soft)});
  }
  return blend_predictions(predictions, BlendWeights::quadratic_spline(size), geometry);
}

Raster segment_scene(nn::Model<float>& model, const sarprep::FeatureStack& stack, std::size_t size,
                     std::size_t stride, bool use_tta) {
  if (size % model.config().size_multiple() != 0)
    throw ConfigError("window " + std::to_string(size) + " not divisible by " +
                      std::to_string(model.config().size_multiple()));
  return segment_scene(model_predictor(model), stack, size, stride, use_tta);
}

Raster threshold_mask(const Raster& soft, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  Raster out(soft.geometry(), soft.nodata());
  auto in = soft.values();
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(in[i]) >= tau ? 1.0f : 0.0f;
  return out;
}

}  // namespace avaseg::infer
