#include <gtest/gtest.h>

#include "avaseg/augment.hpp"
#include "avaseg/error.hpp"
#include "support.hpp"

using namespace avaseg;
using namespace avaseg::augment;

namespace {

sarprep::PatchSample random_patch(std::size_t s, Rng& rng) {
  sarprep::PatchSample p;
  p.features = Tensor32({5, s, s});
  for (auto& v : p.features.data()) v = static_cast<float>(rng.uniform());
  p.labels = Tensor32({1, s, s});
  for (auto& v : p.labels.data()) v = rng.bernoulli(0.2) ? 1.0f : 0.0f;
  return p;
}

bool same(const Tensor32& a, const Tensor32& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

std::pair<double, double> centroid(const float* plane, std::size_t s, float threshold) {
  double r = 0, c = 0, n = 0;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j)
      if (plane[i * s + j] >= threshold) {
        const double w = plane[i * s + j];
        r += w * i;
        c += w * j;
        n += w;
      }
  return {r / n, c / n};
}

}  // namespace

TEST(Augment, ZeroParamsGiveIdentity) {
  Rng rng(1);
  EXPECT_EQ(sample_transform(AugmentParams::none(), rng), AffineTransform::identity());
}

TEST(Augment, SameSeedSameTransform) {
  Rng a(42), b(42);
  const AugmentParams p;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(sample_transform(p, a), sample_transform(p, b));
}

TEST(Augment, CertainHorizontalFlip) {
  AugmentParams p = AugmentParams::none();
  p.p_flip_h = 1.0;
  Rng rng(3);
  EXPECT_EQ(sample_transform(p, rng), AffineTransform::flip_horizontal());
}

TEST(Augment, ParamValidation) {
  AugmentParams p;
  p.p_flip_h = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p = AugmentParams{};
  p.zoom_min = 1.1;
  EXPECT_THROW(p.validate(), ConfigError);
  p = AugmentParams{};
  p.max_shift = -1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Augment, IdentityIsBitExact) {
  Rng rng(4);
  const auto p = random_patch(16, rng);
  const auto q = apply_transform(p, AffineTransform::identity());
  EXPECT_TRUE(same(p.features, q.features));
  EXPECT_TRUE(same(p.labels, q.labels));
}

TEST(Augment, FlipTwiceIsIdentity) {
  Rng rng(5);
  const auto p = random_patch(16, rng);
  for (const auto& f : {AffineTransform::flip_horizontal(), AffineTransform::flip_vertical()}) {
    const auto once = apply_transform(p, f);
    EXPECT_FALSE(same(once.features, p.features));
    const auto twice = apply_transform(once, f);
    EXPECT_TRUE(same(twice.features, p.features));
    EXPECT_TRUE(same(twice.labels, p.labels));
  }
}

TEST(Augment, FlipMovesColumns) {
  Rng rng(6);
  const auto p = random_patch(8, rng);
  const auto q = apply_transform(p, AffineTransform::flip_horizontal());
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(q.features[2 * 64 + r * 8 + c], p.features[2 * 64 + r * 8 + (7 - c)]);
}

TEST(Augment, QuarterTurnsAreExactAndInvertible) {
  Rng rng(7);
  const auto p = random_patch(12, rng);
  for (double deg : {90.0, 180.0, 270.0}) {
    const auto t = AffineTransform::rotation(deg);
    const auto back = apply_transform(apply_transform(p, t), t.inverse());
    EXPECT_TRUE(same(back.features, p.features)) << deg;
    EXPECT_TRUE(same(back.labels, p.labels)) << deg;
  }
}

TEST(Augment, IntegerShiftMovesMarker) {
  sarprep::PatchSample p;
  p.features = Tensor32({5, 16, 16});
  p.labels = Tensor32({1, 16, 16});
  p.labels[5 * 16 + 7] = 1;
  p.features[5 * 16 + 7] = 1;
  const auto q = apply_transform(p, AffineTransform::translation(3, -2, 16));
  for (std::size_t i = 0; i < 256; ++i) {
    const float expected = i == 8 * 16 + 5 ? 1.0f : 0.0f;
    EXPECT_EQ(q.labels[i], expected) << i;
    EXPECT_EQ(q.features[i], expected) << i;
  }
}

TEST(Augment, OutsideIsZeroFilled) {
  Rng rng(8);
  auto p = random_patch(16, rng);
  for (auto& v : p.labels.data()) v = 1;
  const auto q = apply_transform(p, AffineTransform::translation(0, 4, 16));
  for (std::size_t r = 0; r < 16; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_EQ(q.labels[r * 16 + c], 0.0f);
      EXPECT_EQ(q.features[r * 16 + c], 0.0f);
    }
}

TEST(Augment, SingularTransformRejected) {
  Rng rng(9);
  AffineTransform t;
  t.linear = {{{0.0, 0.0}, {0.0, 0.0}}};
  EXPECT_THROW(apply_transform(random_patch(8, rng), t), ConfigError);
}

TEST(Augment, LabelsStayBinaryAndAlignWithFeatures) {
  Rng rng(10);
  const AugmentParams params;
  for (int trial = 0; trial < 20; ++trial) {
    sarprep::PatchSample p;
    p.features = Tensor32({5, 32, 32});
    p.labels = Tensor32({1, 32, 32});
    const std::size_t r0 = 10 + rng.below(10), c0 = 10 + rng.below(10);
    for (std::size_t r = r0; r < r0 + 4; ++r)
      for (std::size_t c = c0; c < c0 + 5; ++c) {
        p.labels[r * 32 + c] = 1;
        p.features[r * 32 + c] = 1;
      }
    const auto q = apply_transform(p, sample_transform(params, rng));
    for (float v : q.labels.data()) EXPECT_TRUE(v == 0.0f || v == 1.0f);
    const auto lc = centroid(q.labels.ptr(), 32, 0.5f);
    const auto fc = centroid(q.features.ptr(), 32, 1e-6f);
    EXPECT_LE(std::abs(lc.first - fc.first), 1.0);
    EXPECT_LE(std::abs(lc.second - fc.second), 1.0);
  }
}

TEST(Augment, ComposeAndInverse) {
  const auto t = AffineTransform::rotation(30).then(AffineTransform::translation(2, 1, 10));
  const auto id = t.then(t.inverse());
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(id.linear[i][j], i == j ? 1.0 : 0.0, 1e-12);
    EXPECT_NEAR(id.shift[i], 0.0, 1e-12);
  }
}
