#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "avaseg/infer.hpp"
#include "support.hpp"

using namespace avaseg;
using namespace avaseg::infer;

namespace {

GridGeometry rect(std::size_t ncols, std::size_t nrows) { return GridGeometry{ncols, nrows, 0.0, 0.0, 20.0}; }

sarprep::FeatureStack random_stack(const GridGeometry& g, Rng& rng) {
  sarprep::FeatureStack s;
  for (auto& ch : s.channels) ch = fixtures::random_raster(g, rng, 0.0, 1.0);
  return s;
}

Predictor constant_predictor(float v) {
  return [v](const Tensor32& x) { return Tensor32({x.dim(0), 1, x.dim(2), x.dim(3)}, v); };
}

// Output = 3x3 box blur of the VV channel (zero padded), a smooth stand-in model.
Predictor blur_predictor() {
  return [](const Tensor32& x) {
    const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    Tensor32 y({n, 1, h, w});
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
          double acc = 0;
          for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
              const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
              if (rr >= 0 && cc >= 0 && rr < static_cast<long>(h) && cc < static_cast<long>(w)) acc += x.at(s, 0, rr, cc);
            }
          y.at(s, 0, r, c) = static_cast<float>(acc / 9.0);
        }
    return y;
  };
}

std::vector<float> values(const Tensor32& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Tiling, AxisOffsets) {
  EXPECT_EQ(axis_offsets(320, 160, 80), (std::vector<std::size_t>{0, 80, 160}));
  EXPECT_EQ(axis_offsets(160, 160, 80), (std::vector<std::size_t>{0}));
  EXPECT_EQ(axis_offsets(330, 160, 80), (std::vector<std::size_t>{0, 80, 160, 170}));
  EXPECT_THROW(axis_offsets(100, 160, 80), GeometryError);
  EXPECT_THROW(axis_offsets(320, 160, 0), ConfigError);
  EXPECT_THROW(axis_offsets(320, 160, 200), ConfigError);
}

TEST(Tiling, WindowsCoverTheScene) {
  EXPECT_EQ(tile_windows(rect(320, 320), 160, 80).size(), 9u);
  EXPECT_EQ(tile_windows(rect(160, 160), 160, 80).size(), 1u);
  auto w = tile_windows(rect(330, 160), 160, 80);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w.back(), (WindowOffset{0, 170}));
  // Brute-force coverage over random geometries.
  Rng rng(1);
  for (int t = 0; t < 30; ++t) {
    const std::size_t s = 16 * (1 + rng.below(4)), ncols = s + rng.below(100), nrows = s + rng.below(100);
    const std::size_t stride = 1 + rng.below(s);
    std::vector<int> hit(ncols * nrows, 0);
    for (auto o : tile_windows(rect(ncols, nrows), s, stride)) {
      ASSERT_LE(o.row + s, nrows);
      ASSERT_LE(o.col + s, ncols);
      for (std::size_t r = 0; r < s; ++r)
        for (std::size_t c = 0; c < s; ++c) hit[(o.row + r) * ncols + o.col + c] = 1;
    }
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 0), 0);
  }
}

TEST(Tta, GroupProperties) {
  Tensor32 x({1, 2, 4, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i * i % 17);
  const auto all = all_transforms();
  EXPECT_EQ(all[0], (TtaTransform{0, false}));
  std::set<std::vector<float>> distinct;
  for (const auto& t : all) {
    auto y = apply_tta(t, x);
    distinct.insert(values(y));
    EXPECT_EQ(values(invert_tta(t, y)), values(x));
  }
  EXPECT_EQ(distinct.size(), 8u);
  auto r = x;
  for (int i = 0; i < 4; ++i) r = apply_tta({1, false}, r);
  EXPECT_EQ(values(r), values(x));
  EXPECT_THROW(apply_tta({1, false}, Tensor32({1, 1, 3, 4})), ShapeError);
}

TEST(Tta, QuarterTurnIsCounterClockwise) {
  Tensor32 x({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  // [[1,2],[3,4]] rotated a quarter turn counter-clockwise is [[2,4],[1,3]].
  EXPECT_EQ(values(apply_tta({1, false}, x)), (std::vector<float>{2, 4, 1, 3}));
  EXPECT_EQ(values(apply_tta({0, true}, x)), (std::vector<float>{2, 1, 4, 3}));
}

TEST(BlendWeights, SplineProfile) {
  for (std::size_t n : {8u, 16u, 160u}) {
    double peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = spline_weight(i, n);
      EXPECT_GT(w, 0.0);
      EXPECT_NEAR(w, spline_weight(n - 1 - i, n), 1e-15);
      peak = std::max(peak, w);
    }
    EXPECT_LE(peak, 1.0);
    // Copies shifted by half the window sum to one.
    for (std::size_t i = 0; i < n / 2; ++i) EXPECT_NEAR(spline_weight(i, n) + spline_weight(i + n / 2, n), 1.0, 1e-12);
  }
  auto b = BlendWeights::quadratic_spline(16);
  EXPECT_NEAR(b.at(3, 11), spline_weight(3, 16) * spline_weight(11, 16), 1e-15);
}

TEST(Blend, SingleWindowPassesThrough) {
  Rng rng(2);
  Tensor32 soft({16, 16});
  for (std::size_t i = 0; i < soft.size(); ++i) soft[i] = static_cast<float>(rng.uniform());
  auto out = blend_predictions({{{0, 0}, soft}}, BlendWeights::quadratic_spline(16), rect(16, 16));
  for (std::size_t i = 0; i < soft.size(); ++i) EXPECT_NEAR(out.values()[i], soft[i], 1e-6);
}

TEST(Blend, UncoveredPixelIsAnError) {
  Tensor32 soft({16, 16}, 0.5f);
  EXPECT_THROW(blend_predictions({{{0, 0}, soft}}, BlendWeights::quadratic_spline(16), rect(20, 16)), Error);
}

TEST(Blend, HalfOverlapTransitionsMonotonically) {
  const std::size_t s = 32;
  auto out = blend_predictions({{{0, 0}, Tensor32({s, s}, 0.2f)}, {{0, s / 2}, Tensor32({s, s}, 0.8f)}},
                               BlendWeights::quadratic_spline(s), rect(s + s / 2, s));
  for (std::size_t r = 0; r < s; ++r) {
    for (std::size_t c = 0; c < s / 2; ++c) EXPECT_NEAR(out.at(r, c), 0.2, 1e-6);
    for (std::size_t c = s; c < s + s / 2; ++c) EXPECT_NEAR(out.at(r, c), 0.8, 1e-6);
    for (std::size_t c = s / 2; c < s; ++c) {
      EXPECT_GT(out.at(r, c), 0.2f);
      EXPECT_LT(out.at(r, c), 0.8f);
      if (c > s / 2) EXPECT_GE(out.at(r, c), out.at(r, c - 1));
      // Closed form: the two weights along the row are w(c) and w(c - s/2).
      const double a = spline_weight(c, s), b = spline_weight(c - s / 2, s);
      EXPECT_NEAR(out.at(r, c), (0.2 * a + 0.8 * b) / (a + b), 1e-6);
    }
  }
}

TEST(SegmentScene, ConstantModelGivesConstantScene) {
  Rng rng(3);
  for (auto [w, h] : {std::pair<std::size_t, std::size_t>{160, 160}, {330, 200}, {417, 171}}) {
    auto stack = random_stack(rect(w, h), rng);
    for (bool tta : {false, true}) {
      auto out = segment_scene(constant_predictor(0.7f), stack, 160, 80, tta);
      for (float v : out.values()) ASSERT_NEAR(v, 0.7, 1e-6);
    }
  }
}

TEST(SegmentScene, DegenerateCompositionEqualsSingleForward) {
  Rng rng(4);
  auto stack = random_stack(rect(32, 32), rng);
  nn::ModelConfig cfg;
  cfg.base_filters = 2;
  cfg.depth = 2;
  cfg.attention_filters = 2;
  auto model = nn::Model<float>::build(cfg, 5);
  auto direct = model.forward(stack.window(0, 0, 32, 32), nn::Mode::eval);
  auto out = segment_scene(model, stack, 32, 32, false);
  for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_NEAR(out.values()[i], direct[i], 1e-6);
}

TEST(SegmentScene, HorizontalFlipCommutesOnSymmetricTiling) {
  // 96 wide with window 32, stride 16: offsets 0..64 are mirror-symmetric.
  Rng rng(5);
  auto stack = random_stack(rect(96, 64), rng);
  sarprep::FeatureStack flipped = stack;
  for (std::size_t ch = 0; ch < stack.channels.size(); ++ch)
    for (std::size_t r = 0; r < 64; ++r)
      for (std::size_t c = 0; c < 96; ++c) flipped.channels[ch].at(r, c) = stack.channels[ch].at(r, 95 - c);
  nn::ModelConfig cfg;
  cfg.base_filters = 2;
  cfg.depth = 2;
  cfg.attention_filters = 2;
  auto model = nn::Model<float>::build(cfg, 6);
  auto a = segment_scene(model, stack, 32, 16, true);
  auto b = segment_scene(model, flipped, 32, 16, true);
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 96; ++c) EXPECT_NEAR(a.at(r, c), b.at(r, 95 - c), 1e-5);
}

TEST(SegmentScene, NoCheckerboardAtSeams) {
  // Smooth input, smooth model: seam gradients stay within twice the median.
  const std::size_t n = 240, s = 160, stride = 80;
  sarprep::FeatureStack stack;
  for (auto& ch : stack.channels) ch = Raster(rect(n, n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      stack.channels[0].at(r, c) = static_cast<float>(0.5 + 0.4 * std::sin(r / 17.0) * std::cos(c / 23.0));
  auto out = segment_scene(blur_predictor(), stack, s, stride, true);
  std::vector<double> grads;
  auto grad = [&](std::size_t r, std::size_t c) {
    const double gx = out.at(r, c + 1) - out.at(r, c), gy = out.at(r + 1, c) - out.at(r, c);
    return std::hypot(gx, gy);
  };
  for (std::size_t r = 2; r + 3 < n; ++r)
    for (std::size_t c = 2; c + 3 < n; ++c) grads.push_back(grad(r, c));
  std::nth_element(grads.begin(), grads.begin() + grads.size() / 2, grads.end());
  const double median = grads[grads.size() / 2];
  for (std::size_t seam : {stride, s}) {
    for (std::size_t k = 2; k + 3 < n; ++k) {
      EXPECT_LE(grad(seam - 1, k), 2 * median + 1e-9);
      EXPECT_LE(grad(k, seam - 1), 2 * median + 1e-9);
    }
  }
}

TEST(Threshold, GreaterOrEqual) {
  Raster soft(rect(3, 1), -9999.0f, {0.5f, 0.49f, 0.0f});
  auto m = threshold_mask(soft);
  EXPECT_EQ(m.at(0, 0), 1.0f);
  EXPECT_EQ(m.at(0, 1), 0.0f);
  auto all = threshold_mask(soft, 0.0);
  for (float v : all.values()) EXPECT_EQ(v, 1.0f);
  EXPECT_THROW(threshold_mask(soft, 1.5), ConfigError);
  EXPECT_THROW(threshold_mask(soft, -0.1), ConfigError);
}
