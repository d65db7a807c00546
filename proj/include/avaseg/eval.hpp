#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avaseg/raster.hpp"

namespace avaseg::eval {

struct PixelCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct PixelScores {
  PixelCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision/recall/F1 from counts; each ratio is 0 when its denominator is 0.
PixelScores scores_from_counts(const PixelCounts& c);

PixelScores pixel_confusion(const Raster& pred, const Raster& truth);

/// Inclusive bounding box of one 8-connected component.
struct ComponentBox {
  std::size_t id = 0;
  std::size_t row_min = 0, col_min = 0, row_max = 0, col_max = 0;
  std::size_t pixels = 0;

  std::size_t area() const { return (row_max - row_min + 1) * (col_max - col_min + 1); }
};

/// 8-connected components, ids in raster scan order of their first pixel.
std::vector<ComponentBox> connected_components(const Raster& mask);

double bbox_iou(const ComponentBox& a, const ComponentBox& b);

struct Match {
  std::size_t truth_id;
  std::size_t pred_id;
  double iou;
};

struct ObjectMatch {
  std::size_t tp = 0, fn = 0, fp = 0;
  std::vector<Match> matches;
};

/// Greedy one-to-one matching by descending IoU. With min_iou == 0 any
/// positive overlap qualifies; otherwise IoU >= min_iou.
ObjectMatch object_match(const std::vector<ComponentBox>& pred, const std::vector<ComponentBox>& truth, double min_iou);

struct EvalReport {
  PixelScores pixel;
  std::size_t truth_objects = 0;
  std::size_t pred_objects = 0;
  std::size_t tp = 0, fn = 0, fp = 0;
  /// Mean bbox IoU over matched pairs (0 without matches).
  double mean_iou = 0.0;
  std::vector<Match> matches;
};

EvalReport evaluate(const Raster& pred, const Raster& truth, double min_iou = 0.0);

std::string report_json(const EvalReport& r);
std::string report_csv_header();
std::string report_csv_row(const std::string& scene, const EvalReport& r);
/// One-line summary, e.g. "F1 66.7, IoU 70.0, TP 2, FN 1, FP 0".
std::string report_table_row(const EvalReport& r);

/// Throws ConfigError unless every value is 0 or 1.
void require_binary(const Raster& mask, const std::string& what);

}  // namespace avaseg::eval
