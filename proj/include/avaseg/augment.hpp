#pragma once

#include <array>

#include "avaseg/rng.hpp"
#include "avaseg/sarprep.hpp"

namespace avaseg::augment {

struct AugmentParams {
  double p_flip_h = 0.5;
  double p_flip_v = 0.5;
  double max_shift = 0.1;  // fraction of the patch size
  double max_rotation_deg = 15.0;
  double zoom_min = 0.9;
  double zoom_max = 1.1;
  double max_shear_deg = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// All magnitudes zero.
  static AugmentParams none();
};

/// Affine map of pixel-center coordinates (x = column, y = row) about the
/// patch center: dst = linear * (src - center) + center + shift * size.
struct AffineTransform {
  std::array<std::array<double, 2>, 2> linear{{{1.0, 0.0}, {0.0, 1.0}}};
  std::array<double, 2> shift{0.0, 0.0};  // (x, y) as fractions of the patch size

  static AffineTransform identity() { return {}; }
  static AffineTransform translation(double drow, double dcol, std::size_t size);
  static AffineTransform flip_horizontal();
  static AffineTransform flip_vertical();
  static AffineTransform rotation(double degrees);

  /// Apply `next` after this transform.
  AffineTransform then(const AffineTransform& next) const;
  AffineTransform inverse() const;
  double determinant() const { return linear[0][0] * linear[1][1] - linear[0][1] * linear[1][0]; }
  bool operator==(const AffineTransform&) const = default;
};

/// Shear, rotation, zoom, shift, then flips. Deterministic given the RNG state.
AffineTransform sample_transform(const AugmentParams& params, Rng& rng);

/// Bilinear for features, nearest for labels, zero outside the patch.
sarprep::PatchSample apply_transform(const sarprep::PatchSample& patch, const AffineTransform& t);

}  // namespace avaseg::augment
