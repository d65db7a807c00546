#include "avaseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <mutex>
#include <numeric>

#include <fftw3.h>

#include "avaseg/error.hpp"
#include "avaseg/log.hpp"
#include "avaseg/rng.hpp"

namespace avaseg::synth {

namespace fs = std::filesystem;
using sarprep::PatchArchiveEntry;
using sarprep::SceneRecord;

void SynthConfig::validate() const {
  if (size == 0 || size % 16 != 0) throw ConfigError("synthetic size must be a positive multiple of 16");
  if (!(cell_size > 0)) throw ConfigError("cell_size must be positive");
  if (!(relief_amplitude >= 0)) throw ConfigError("relief_amplitude must be non-negative");
  if (!(roughness > 0)) throw ConfigError("roughness must be positive");
  if (!(valley_exponent > 0)) throw ConfigError("valley_exponent must be positive");
  if (!(noise_db >= 0)) throw ConfigError("noise_db must be non-negative");
}

namespace {

std::mutex g_fftw_mutex;

GridGeometry scene_geometry(const SynthConfig& cfg) {
  return GridGeometry{cfg.size, cfg.size, 0.0, 0.0, cfg.cell_size};
}

// White noise filtered by |k|^-roughness, zero mean.
std::vector<double> spectral_noise(std::size_t n, double roughness, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t half = n / 2 + 1;
  std::vector<double> real(n * n);
  for (auto& v : real) v = rng.normal();
  std::vector<std::complex<double>> spec(n * half);

  {
    std::lock_guard lock(g_fftw_mutex);
    fftw_plan fwd = fftw_plan_dft_r2c_2d(static_cast<int>(n), static_cast<int>(n), real.data(),
                                         reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const double kr = static_cast<double>(r <= n / 2 ? r : n - r);
    for (std::size_t c = 0; c < half; ++c) {
      const double kc = static_cast<double>(c);
      const double k = std::hypot(kr, kc);
      spec[r * half + c] *= k == 0.0 ? 0.0 : std::pow(k, -roughness);
    }
  }
  {
    std::lock_guard lock(g_fftw_mutex);
    fftw_plan inv = fftw_plan_dft_c2r_2d(static_cast<int>(n), static_cast<int>(n),
                                         reinterpret_cast<fftw_complex*>(spec.data()), real.data(), FFTW_ESTIMATE);
    fftw_execute(inv);
    fftw_destroy_plan(inv);
  }
  return real;
}

Raster scaled(const SynthConfig& cfg, const std::vector<double>& field, double lo, double hi) {
  Raster out(scene_geometry(cfg));
  const auto [mn, mx] = std::minmax_element(field.begin(), field.end());
  const double span = *mx - *mn;
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<float>(span > 0 && hi > lo ? lo + (hi - lo) * (field[i] - *mn) / span : lo);
  return out;
}

struct Blob {
  std::vector<std::size_t> cells;
};

// Ellipse elongated along the downhill direction at `center`, restricted to the
// connected part of `allowed` that contains the center.
Blob grow_blob(const Raster& dem, const std::vector<std::uint8_t>& allowed, std::size_t center, Rng& rng) {
  const std::size_t n = dem.ncols(), rows = dem.nrows();
  const std::size_t r0 = center / n, c0 = center % n;
  const auto z = [&](std::size_t r, std::size_t c) { return static_cast<double>(dem.at(r, c)); };
  const double dzr = (z(std::min(r0 + 1, rows - 1), c0) - z(r0 > 0 ? r0 - 1 : 0, c0));
  const double dzc = (z(r0, std::min(c0 + 1, n - 1)) - z(r0, c0 > 0 ? c0 - 1 : 0));
  double ur = -dzr, uc = -dzc;
  const double norm = std::hypot(ur, uc);
  if (norm > 0) {
    ur /= norm;
    uc /= norm;
  } else {
    ur = 1.0;
    uc = 0.0;
  }
  const double a = rng.uniform(6.0, 14.0), b = rng.uniform(2.5, 4.5);

  Blob blob;
  std::vector<std::uint8_t> seen(allowed.size(), 0);
  std::deque<std::size_t> queue{center};
  seen[center] = 1;
  while (!queue.empty()) {
    const std::size_t idx = queue.front();
    queue.pop_front();
    blob.cells.push_back(idx);
    const long r = static_cast<long>(idx / n), c = static_cast<long>(idx % n);
    for (long dr = -1; dr <= 1; ++dr) {
      for (long dc = -1; dc <= 1; ++dc) {
        const long rr = r + dr, cc = c + dc;
        if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(n)) continue;
        const std::size_t j = static_cast<std::size_t>(rr) * n + static_cast<std::size_t>(cc);
        if (seen[j] || !allowed[j]) continue;
        const double orr = static_cast<double>(rr) - static_cast<double>(r0);
        const double occ = static_cast<double>(cc) - static_cast<double>(c0);
        const double along = orr * ur + occ * uc, across = -orr * uc + occ * ur;
        if ((along / a) * (along / a) + (across / b) * (across / b) > 1.0) continue;
        seen[j] = 1;
        queue.push_back(j);
      }
    }
  }
  std::sort(blob.cells.begin(), blob.cells.end());
  return blob;
}

// True when no blob cell is within Chebyshev distance 1 of an occupied cell.
bool isolated(const Blob& blob, const std::vector<std::uint8_t>& occupied, std::size_t n, std::size_t rows) {
  for (std::size_t idx : blob.cells) {
    const long r = static_cast<long>(idx / n), c = static_cast<long>(idx % n);
    for (long dr = -1; dr <= 1; ++dr)
      for (long dc = -1; dc <= 1; ++dc) {
        const long rr = r + dr, cc = c + dc;
        if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(n)) continue;
        if (occupied[static_cast<std::size_t>(rr) * n + static_cast<std::size_t>(cc)]) return false;
      }
  }
  return true;
}

constexpr std::size_t kMinBlobPixels = 8;

// Plants up to `count` isolated blobs inside `allowed`, centered on cells of
// `centers`.
std::vector<Blob> plant(const Raster& dem, const std::vector<std::uint8_t>& allowed, const std::vector<std::uint8_t>& centers,
                        std::vector<std::uint8_t>& occupied, std::size_t count, Rng& rng) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < allowed.size(); ++i)
    if (allowed[i] && centers[i]) candidates.push_back(i);
  std::vector<Blob> out;
  if (candidates.empty()) return out;
  const std::size_t attempts = 200 * count;
  for (std::size_t t = 0; t < attempts && out.size() < count; ++t) {
    const std::size_t center = candidates[rng.below(candidates.size())];
    if (occupied[center]) continue;
    Blob blob = grow_blob(dem, allowed, center, rng);
    if (blob.cells.size() < kMinBlobPixels || !isolated(blob, occupied, dem.ncols(), dem.nrows())) continue;
    for (std::size_t idx : blob.cells) occupied[idx] = 1;
    out.push_back(std::move(blob));
  }
  return out;
}

// Cells with a release cell within Chebyshev distance `reach`.
std::vector<std::uint8_t> near_release(const topo::ReleaseMask& mask, std::size_t reach) {
  const std::size_t n = mask.geometry.ncols, rows = mask.geometry.nrows;
  std::vector<std::uint32_t> sat((rows + 1) * (n + 1), 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c)
      sat[(r + 1) * (n + 1) + c + 1] = mask.flags[r * n + c] + sat[r * (n + 1) + c + 1] + sat[(r + 1) * (n + 1) + c] -
                                       sat[r * (n + 1) + c];
  std::vector<std::uint8_t> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t r0 = r > reach ? r - reach : 0, r1 = std::min(rows, r + reach + 1);
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t c0 = c > reach ? c - reach : 0, c1 = std::min(n, c + reach + 1);
      out[r * n + c] = sat[r1 * (n + 1) + c1] - sat[r0 * (n + 1) + c1] - sat[r1 * (n + 1) + c0] + sat[r0 * (n + 1) + c0] > 0;
    }
  }
  return out;
}

}  // namespace

Raster smooth_field(const SynthConfig& cfg, double roughness, double lo, double hi, std::uint64_t seed) {
  return scaled(cfg, spectral_noise(cfg.size, roughness, seed), lo, hi);
}

Raster synth_dem(const SynthConfig& cfg) {
  cfg.validate();
  Raster dem = smooth_field(cfg, cfg.roughness, 0.0, 1.0, derive_seed(cfg.seed, 1));
  for (auto& v : dem.values())
    v = static_cast<float>(cfg.relief_amplitude * std::pow(static_cast<double>(v), cfg.valley_exponent));
  return dem;
}

float quantile(const Raster& r, double q) {
  std::vector<float> v(r.values().begin(), r.values().end());
  if (v.empty()) return 0.0f;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(std::floor(q * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

SynthScene synth_scene_pair(const SynthConfig& cfg, const Raster& dem, const std::string& scene_id) {
  cfg.validate();
  if (dem.ncols() != cfg.size || dem.nrows() != cfg.size) throw GeometryError("DEM does not match the synthetic size");
  SynthScene s;
  const topo::ParConfig par_cfg;
  s.slope = topo::compute_slope(dem);
  const auto release = topo::compute_release_mask(s.slope, par_cfg);
  s.par = topo::par_fast(dem, release, par_cfg);
  auto centers = near_release(release, kRunoutReachCells);
  const float median = quantile(s.par, 0.5), upper = quantile(s.par, kCenterParQuantile);
  for (std::size_t i = 0; i < centers.size(); ++i) centers[i] = centers[i] && s.par.values()[i] >= upper;

  const std::size_t cells = dem.geometry().cells();
  std::vector<std::uint8_t> debris(cells), other(cells), occupied(cells, 0);
  for (std::size_t i = 0; i < cells; ++i) {
    const float sl = s.slope.values()[i], p = s.par.values()[i];
    debris[i] = sl >= kDebrisSlopeMinDeg && sl <= kDebrisSlopeMaxDeg && p > median;
    other[i] = !debris[i];
  }

  Rng rng(derive_seed(cfg.seed, 2));
  const auto avalanches = plant(dem, debris, centers, occupied, cfg.n_avalanches, rng);
  const auto distractors = plant(dem, other, other, occupied, cfg.n_distractors, rng);
  s.planted = avalanches.size();
  s.distractors = distractors.size();
  if (s.planted < cfg.n_avalanches)
    log::event("warning", {{"message", "fewer admissible avalanche sites than requested"},
                           {"scene", scene_id},
                           {"requested", cfg.n_avalanches},
                           {"planted", s.planted}});

  std::vector<float> gain(cells, 0.0f);
  s.labels = Raster(dem.geometry());
  for (const auto* group : {&avalanches, &distractors}) {
    for (const auto& blob : *group) {
      const double g = cfg.debris_gain_db * rng.uniform(0.75, 1.25);
      for (std::size_t idx : blob.cells) {
        gain[idx] = static_cast<float>(g);
        if (group == &avalanches) s.labels.values()[idx] = 1.0f;
      }
    }
  }

  const Raster vv_base = smooth_field(cfg, 3.0, -20.0, -10.0, derive_seed(cfg.seed, 3));
  const Raster vh_base = smooth_field(cfg, 3.0, -20.0, -10.0, derive_seed(cfg.seed, 4));
  Rng noise(derive_seed(cfg.seed, 5));
  auto make = [&](const Raster& base, bool activity) {
    Raster r(dem.geometry());
    for (std::size_t i = 0; i < cells; ++i)
      r.values()[i] = static_cast<float>(base.values()[i] + cfg.noise_db * noise.normal() + (activity ? gain[i] : 0.0f));
    return r;
  };
  s.pair.vv_ref = make(vv_base, false);
  s.pair.vh_ref = make(vh_base, false);
  s.pair.vv_act = make(vv_base, true);
  s.pair.vh_act = make(vh_base, true);
  s.pair.reference = SceneRecord{scene_id + "_ref", "orbit_" + scene_id, "2018-01-01T06:00:00Z", "", "", "", ""};
  s.pair.activity = SceneRecord{scene_id + "_act", "orbit_" + scene_id, "2018-01-13T06:00:00Z", "", "", "", ""};
  return s;
}

DatasetSummary synth_dataset(const SynthConfig& cfg, std::size_t n_scenes, const fs::path& out, std::size_t patch_size,
                             double validation_fraction) {
  cfg.validate();
  if (n_scenes < 2) throw ConfigError("synthetic dataset needs at least 2 scenes (one is held out)");
  if (patch_size == 0 || patch_size % 16 != 0 || patch_size > cfg.size)
    throw ConfigError("patch size must be a multiple of 16 no larger than the scene");
  if (!(validation_fraction >= 0 && validation_fraction < 1)) throw ConfigError("validation fraction must lie in [0, 1)");

  fs::create_directories(out / "scenes");
  fs::create_directories(out / "features");
  std::vector<SceneRecord> train_records, test_records;
  std::vector<sarprep::PatchSample> patches;
  DatasetSummary summary;
  summary.scenes = n_scenes;

  for (std::size_t i = 0; i < n_scenes; ++i) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "s%02zu", i);
    const std::string id = id_buf;
    SynthConfig scfg = cfg;
    scfg.seed = derive_seed(cfg.seed, 100, i);
    const Raster dem = synth_dem(scfg);
    SynthScene scene = synth_scene_pair(scfg, dem, id);
    summary.planted += scene.planted;

    const auto rel = [&](const std::string& name) { return "scenes/" + id + "_" + name + ".rst"; };
    write_raster(scene.pair.vv_ref, out / rel("ref_vv"));
    write_raster(scene.pair.vh_ref, out / rel("ref_vh"));
    write_raster(scene.pair.vv_act, out / rel("act_vv"));
    write_raster(scene.pair.vh_act, out / rel("act_vh"));
    write_raster(dem, out / rel("dem"));
    write_raster(scene.labels, out / rel("labels"));

    SceneRecord ref = scene.pair.reference, act = scene.pair.activity;
    ref.vv_path = rel("ref_vv");
    ref.vh_path = rel("ref_vh");
    ref.dem_path = rel("dem");
    act.vv_path = rel("act_vv");
    act.vh_path = rel("act_vh");
    act.dem_path = rel("dem");
    act.labels_path = rel("labels");

    const auto stack = sarprep::build_feature_stack(scene.pair, scene.slope, scene.par);
    sarprep::write_feature_stack(stack, out / "features", act.id);
    log::event("synth_scene", {{"scene", id}, {"planted", scene.planted}, {"distractors", scene.distractors}});

    const bool held_out = i + 1 == n_scenes;
    auto& records = held_out ? test_records : train_records;
    records.push_back(ref);
    records.push_back(act);
    if (held_out) continue;
    auto p = sarprep::extract_training_patches(stack, scene.labels, patch_size, true, id);
    for (auto& s : p) patches.push_back(std::move(s));
  }

  sarprep::write_manifest(train_records, out / "manifest.json");
  sarprep::write_manifest(test_records, out / "test_manifest.json");

  Rng rng(derive_seed(cfg.seed, 200));
  std::vector<std::size_t> order(patches.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(patches.size())));
  if (validation_fraction > 0 && n_val == 0 && patches.size() >= 2) n_val = 1;
  std::vector<std::uint8_t> is_val(patches.size(), 0);
  for (std::size_t i = 0; i < n_val; ++i) is_val[order[i]] = 1;

  std::vector<PatchArchiveEntry> entries;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    entries.push_back({std::move(patches[i]), is_val[i] ? "val" : "train"});
    (is_val[i] ? summary.validation_patches : summary.train_patches) += 1;
  }
  sarprep::write_patch_archive(entries, out / "patches");
  return summary;
}

}  // namespace avaseg::synth
