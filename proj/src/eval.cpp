#include "avaseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "avaseg/error.hpp"

namespace avaseg::eval {

using json = nlohmann::json;

void require_binary(const Raster& mask, const std::string& what) {
  for (float v : mask.values())
    if (v != 0.0f && v != 1.0f) throw ConfigError(what + " must be binary, found value " + std::to_string(v));
}

PixelScores scores_from_counts(const PixelCounts& c) {
  PixelScores s;
  s.counts = c;
  s.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  s.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

PixelScores pixel_confusion(const Raster& pred, const Raster& truth) {
  require_same_geometry(truth.geometry(), pred.geometry(), "prediction");
  require_binary(pred, "prediction");
  require_binary(truth, "ground truth");
  PixelCounts c;
  auto p = pred.values(), t = truth.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pp = p[i] == 1.0f, tt = t[i] == 1.0f;
    if (pp && tt) ++c.tp;
    else if (pp) ++c.fp;
    else if (tt) ++c.fn;
    else ++c.tn;
  }
  return scores_from_counts(c);
}

std::vector<ComponentBox> connected_components(const Raster& mask) {
  require_binary(mask, "mask");
  const std::size_t nr = mask.nrows(), nc = mask.ncols();
  std::vector<std::int64_t> label(nr * nc, -1);
  std::vector<ComponentBox> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < nr * nc; ++start) {
    if (mask.values()[start] != 1.0f || label[start] >= 0) continue;
    ComponentBox box;
    box.id = out.size();
    box.row_min = box.row_max = start / nc;
    box.col_min = box.col_max = start % nc;
    label[start] = static_cast<std::int64_t>(box.id);
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t r = i / nc, c = i % nc;
      ++box.pixels;
      box.row_min = std::min(box.row_min, r);
      box.row_max = std::max(box.row_max, r);
      box.col_min = std::min(box.col_min, c);
      box.col_max = std::max(box.col_max, c);
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (!dr && !dc) continue;
          const auto rr = static_cast<std::ptrdiff_t>(r) + dr, cc = static_cast<std::ptrdiff_t>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(nr) || cc >= static_cast<std::ptrdiff_t>(nc)) continue;
          const std::size_t j = static_cast<std::size_t>(rr) * nc + static_cast<std::size_t>(cc);
          if (mask.values()[j] == 1.0f && label[j] < 0) {
            label[j] = static_cast<std::int64_t>(box.id);
            stack.push_back(j);
          }
        }
      }
    }
    out.push_back(box);
  }
  return out;
}

double bbox_iou(const ComponentBox& a, const ComponentBox& b) {
  const std::size_t r0 = std::max(a.row_min, b.row_min), r1 = std::min(a.row_max, b.row_max);
  const std::size_t c0 = std::max(a.col_min, b.col_min), c1 = std::min(a.col_max, b.col_max);
  const double inter = (r0 <= r1 && c0 <= c1) ? static_cast<double>((r1 - r0 + 1) * (c1 - c0 + 1)) : 0.0;
  const double uni = static_cast<double>(a.area() + b.area()) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

ObjectMatch object_match(const std::vector<ComponentBox>& pred, const std::vector<ComponentBox>& truth, double min_iou) {
  if (!(min_iou >= 0.0 && min_iou <= 1.0)) throw ConfigError("min_iou must lie in [0, 1]");
  std::vector<Match> candidates;
  for (std::size_t t = 0; t < truth.size(); ++t)
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const double iou = bbox_iou(truth[t], pred[p]);
      const bool ok = min_iou == 0.0 ? iou > 0.0 : iou >= min_iou;
      if (ok) candidates.push_back({t, p, iou});
    }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.truth_id != b.truth_id) return a.truth_id < b.truth_id;
    return a.pred_id < b.pred_id;
  });
  std::vector<bool> truth_used(truth.size()), pred_used(pred.size());
  ObjectMatch m;
  for (const auto& c : candidates) {
    if (truth_used[c.truth_id] || pred_used[c.pred_id]) continue;
    truth_used[c.truth_id] = pred_used[c.pred_id] = true;
    m.matches.push_back(c);
  }
  m.tp = m.matches.size();
  m.fn = truth.size() - m.tp;
  m.fp = pred.size() - m.tp;
  return m;
}

EvalReport evaluate(const Raster& pred, const Raster& truth, double min_iou) {
  EvalReport r;
  r.pixel = pixel_confusion(pred, truth);
  const auto pc = connected_components(pred);
  const auto tc = connected_components(truth);
  const auto m = object_match(pc, tc, min_iou);
  r.truth_objects = tc.size();
  r.pred_objects = pc.size();
  r.tp = m.tp;
  r.fn = m.fn;
  r.fp = m.fp;
  r.matches = m.matches;
  double sum = 0.0;
  for (const auto& x : m.matches) sum += x.iou;
  r.mean_iou = m.matches.empty() ? 0.0 : sum / static_cast<double>(m.matches.size());
  return r;
}

std::string report_json(const EvalReport& r) {
  json matches = json::array();
  for (const auto& m : r.matches) matches.push_back({{"truth_id", m.truth_id}, {"pred_id", m.pred_id}, {"iou", m.iou}});
  json j = {{"pixel",
             {{"precision", r.pixel.precision},
              {"recall", r.pixel.recall},
              {"f1", r.pixel.f1},
              {"tp", r.pixel.counts.tp},
              {"fp", r.pixel.counts.fp},
              {"fn", r.pixel.counts.fn},
              {"tn", r.pixel.counts.tn}}},
            {"objects",
             {{"truth", r.truth_objects},
              {"predicted", r.pred_objects},
              {"tp", r.tp},
              {"fn", r.fn},
              {"fp", r.fp},
              {"mean_bbox_iou", r.mean_iou}}},
            {"matches", matches}};
  return j.dump(2) + "\n";
}

std::string report_csv_header() { return "scene,precision,recall,f1,mean_bbox_iou,tp,fn,fp\n"; }

std::string report_csv_row(const std::string& scene, const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%zu,%zu,%zu\n", scene.c_str(), r.pixel.precision, r.pixel.recall,
                r.pixel.f1, r.mean_iou, r.tp, r.fn, r.fp);
  return buf;
}

std::string report_table_row(const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "F1 %.1f, IoU %.1f, TP %zu, FN %zu, FP %zu", 100.0 * r.pixel.f1, 100.0 * r.mean_iou, r.tp,
                r.fn, r.fp);
  return buf;
}

}  // namespace avaseg::eval
