#include "avaseg/augment.hpp"

#include <cmath>

#include "avaseg/error.hpp"

namespace avaseg::augment {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

// Integer-valued coordinates stay exact under 90-degree rotations and flips.
double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

}  // namespace

void AugmentParams::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(p_flip_h) || !prob(p_flip_v)) throw ConfigError("flip probabilities must lie in [0, 1]");
  if (max_shift < 0 || max_rotation_deg < 0 || max_shear_deg < 0) throw ConfigError("augmentation ranges must be non-negative");
  if (!(zoom_min <= 1.0 && 1.0 <= zoom_max)) throw ConfigError("zoom range must satisfy min <= 1 <= max");
  if (!(zoom_min > 0)) throw ConfigError("zoom minimum must be positive");
}

AugmentParams AugmentParams::none() {
  AugmentParams p;
  p.p_flip_h = p.p_flip_v = 0.0;
  p.max_shift = p.max_rotation_deg = p.max_shear_deg = 0.0;
  p.zoom_min = p.zoom_max = 1.0;
  return p;
}

AffineTransform AffineTransform::translation(double drow, double dcol, std::size_t size) {
  AffineTransform t;
  t.shift = {dcol / static_cast<double>(size), drow / static_cast<double>(size)};
  return t;
}

AffineTransform AffineTransform::flip_horizontal() {
  AffineTransform t;
  t.linear[0][0] = -1.0;
  return t;
}

AffineTransform AffineTransform::flip_vertical() {
  AffineTransform t;
  t.linear[1][1] = -1.0;
  return t;
}

AffineTransform AffineTransform::rotation(double degrees) {
  AffineTransform t;
  const double c = std::cos(degrees * kDegToRad), s = std::sin(degrees * kDegToRad);
  t.linear = {{{c, -s}, {s, c}}};
  return t;
}

AffineTransform AffineTransform::then(const AffineTransform& next) const {
  AffineTransform out;
  const auto& A = next.linear;
  const auto& B = linear;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.linear[i][j] = A[i][0] * B[0][j] + A[i][1] * B[1][j];
  for (int i = 0; i < 2; ++i) out.shift[i] = A[i][0] * shift[0] + A[i][1] * shift[1] + next.shift[i];
  return out;
}

AffineTransform AffineTransform::inverse() const {
  const double det = determinant();
  if (std::abs(det) < 1e-12) throw ConfigError("affine transform is singular");
  AffineTransform inv;
  inv.linear = {{{linear[1][1] / det, -linear[0][1] / det}, {-linear[1][0] / det, linear[0][0] / det}}};
  for (int i = 0; i < 2; ++i) inv.shift[i] = -(inv.linear[i][0] * shift[0] + inv.linear[i][1] * shift[1]);
  return inv;
}

AffineTransform sample_transform(const AugmentParams& params, Rng& rng) {
  params.validate();
  // Every draw happens regardless of the magnitudes so the stream position
  // does not depend on the configuration.
  const double shear = rng.uniform(-params.max_shear_deg, params.max_shear_deg) * kDegToRad;
  const double angle = rng.uniform(-params.max_rotation_deg, params.max_rotation_deg);
  const double zoom = rng.uniform(params.zoom_min, params.zoom_max);
  const double sx = rng.uniform(-params.max_shift, params.max_shift);
  const double sy = rng.uniform(-params.max_shift, params.max_shift);
  const bool fh = rng.bernoulli(params.p_flip_h);
  const bool fv = rng.bernoulli(params.p_flip_v);

  AffineTransform t;
  if (shear != 0.0) t.linear[0][1] = std::tan(shear);
  if (angle != 0.0) t = t.then(AffineTransform::rotation(angle));
  if (zoom != 1.0) {
    AffineTransform z;
    z.linear = {{{zoom, 0.0}, {0.0, zoom}}};
    t = t.then(z);
  }
  t.shift[0] += sx;
  t.shift[1] += sy;
  if (fh) t = t.then(AffineTransform::flip_horizontal());
  if (fv) t = t.then(AffineTransform::flip_vertical());
  return t;
}

sarprep::PatchSample apply_transform(const sarprep::PatchSample& patch, const AffineTransform& t) {
  if (patch.features.rank() != 3 || patch.features.dim(1) != patch.features.dim(2))
    throw ShapeError("augmentation expects square (C, S, S) features, got " + patch.features.shape_string());
  const std::size_t channels = patch.features.dim(0), size = patch.features.dim(1);
  if (patch.labels.size() != size * size) throw ShapeError("label mask does not match feature patch");
  const AffineTransform inv = t.inverse();
  if (t == AffineTransform::identity()) return patch;

  const double center = (static_cast<double>(size) - 1.0) / 2.0;
  const double n = static_cast<double>(size);
  const auto s = static_cast<std::ptrdiff_t>(size);

  sarprep::PatchSample out = patch;
  out.features.fill(0.0f);
  out.labels.fill(0.0f);
  const float* src = patch.features.ptr();
  float* dst = out.features.ptr();

  for (std::size_t row = 0; row < size; ++row) {
    for (std::size_t col = 0; col < size; ++col) {
      const double dx = static_cast<double>(col) - center - t.shift[0] * n;
      const double dy = static_cast<double>(row) - center - t.shift[1] * n;
      const double x = snap(inv.linear[0][0] * dx + inv.linear[0][1] * dy + center);
      const double y = snap(inv.linear[1][0] * dx + inv.linear[1][1] * dy + center);

      const auto nx = static_cast<std::ptrdiff_t>(std::lround(x)), ny = static_cast<std::ptrdiff_t>(std::lround(y));
      if (nx >= 0 && ny >= 0 && nx < s && ny < s)
        out.labels[row * size + col] = patch.labels[static_cast<std::size_t>(ny * s + nx)] == 1.0f ? 1.0f : 0.0f;

      const double fx0 = std::floor(x), fy0 = std::floor(y);
      const double fx = x - fx0, fy = y - fy0;
      const auto x0 = static_cast<std::ptrdiff_t>(fx0), y0 = static_cast<std::ptrdiff_t>(fy0);
      if (x0 < -1 || y0 < -1 || x0 >= s || y0 >= s) continue;
      const std::array<std::ptrdiff_t, 2> xs{x0, x0 + 1}, ys{y0, y0 + 1};
      const std::array<double, 2> wx{1.0 - fx, fx}, wy{1.0 - fy, fy};
      for (std::size_t c = 0; c < channels; ++c) {
        const float* plane = src + c * size * size;
        double acc = 0.0;
        for (int j = 0; j < 2; ++j) {
          if (ys[j] < 0 || ys[j] >= s || wy[j] == 0.0) continue;
          for (int i = 0; i < 2; ++i) {
            if (xs[i] < 0 || xs[i] >= s || wx[i] == 0.0) continue;
            acc += wy[j] * wx[i] * plane[ys[j] * s + xs[i]];
          }
        }
        dst[c * size * size + row * size + col] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace avaseg::augment
