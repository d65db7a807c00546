#include "avaseg/cli.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "avaseg/bytes.hpp"
#include "avaseg/error.hpp"
#include "avaseg/infer.hpp"
#include "avaseg/log.hpp"
#include "avaseg/synth.hpp"

namespace avaseg::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using sarprep::Channel;

namespace {

using Handlers = std::map<std::string, std::function<void(const json&)>>;

void read_section(const json& j, const std::string& section, const Handlers& handlers) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + section + "." + key + "': " + e.what());
    }
  }
}

template <typename T>
std::function<void(const json&)> into(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

std::string resolve(const std::string& p, const fs::path& base) {
  return p.empty() || fs::path(p).is_absolute() || base.empty() ? p : (base / p).string();
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  par.validate();
  if (infer.window == 0 || infer.window % 16 != 0) throw ConfigError("window must be a positive multiple of 16");
  if (infer.window % model.size_multiple() != 0) throw ConfigError("window not divisible by the model's size multiple");
  if (infer.stride == 0 || infer.stride > infer.window) throw ConfigError("stride must lie in [1, window]");
  if (!(infer.threshold >= 0.0 && infer.threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  if (!(min_iou >= 0.0 && min_iou <= 1.0)) throw ConfigError("min_iou must lie in [0, 1]");
}

std::string RunConfig::to_json() const {
  const auto& a = train.augment_params;
  json j = {
      {"seed", seed},
      {"data", {{"patches", patches}, {"scene", scene}}},
      {"model", json::parse(model.to_json())},
      {"loss", {{"avalanche_weight", train.loss.avalanche_weight}, {"background_weight", train.loss.background_weight}}},
      {"augment",
       {{"enabled", train.augment},
        {"p_flip_h", a.p_flip_h},
        {"p_flip_v", a.p_flip_v},
        {"max_shift", a.max_shift},
        {"max_rotation_deg", a.max_rotation_deg},
        {"zoom_min", a.zoom_min},
        {"zoom_max", a.zoom_max},
        {"max_shear_deg", a.max_shear_deg},
        {"seed", a.seed}}},
      {"optimizer",
       {{"lr", train.optimizer.lr}, {"beta1", train.optimizer.beta1}, {"beta2", train.optimizer.beta2}, {"eps", train.optimizer.eps}}},
      {"train", {{"epochs", train.epochs}, {"batch_size", train.batch_size}, {"patience", train.patience}}},
      {"par",
       {{"radius_m", par.radius_m},
        {"release_min_deg", par.release_min_deg},
        {"release_max_deg", par.release_max_deg},
        {"empty_value_deg", par.empty_value_deg}}},
      {"infer", {{"window", infer.window}, {"stride", infer.stride}, {"tta", infer.tta}, {"threshold", infer.threshold}}},
      {"eval", {{"min_iou", min_iou}}},
  };
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text, const fs::path& base_dir) {
  RunConfig c;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  auto& t = c.train;
  auto& a = t.augment_params;
  read_section(doc, "",
               {
                   {"seed", into(c.seed)},
                   {"data",
                    [&](const json& j) {
                      read_section(j, "data", {{"patches", into(c.patches)}, {"scene", into(c.scene)}});
                    }},
                   {"model", [&](const json& j) { c.model = nn::ModelConfig::from_json(j.dump()); }},
                   {"loss",
                    [&](const json& j) {
                      read_section(j, "loss",
                                   {{"avalanche_weight", into(t.loss.avalanche_weight)},
                                    {"background_weight", into(t.loss.background_weight)}});
                    }},
                   {"augment",
                    [&](const json& j) {
                      read_section(j, "augment",
                                   {{"enabled", into(t.augment)},
                                    {"p_flip_h", into(a.p_flip_h)},
                                    {"p_flip_v", into(a.p_flip_v)},
                                    {"max_shift", into(a.max_shift)},
                                    {"max_rotation_deg", into(a.max_rotation_deg)},
                                    {"zoom_min", into(a.zoom_min)},
                                    {"zoom_max", into(a.zoom_max)},
                                    {"max_shear_deg", into(a.max_shear_deg)},
                                    {"seed", into(a.seed)}});
                    }},
                   {"optimizer",
                    [&](const json& j) {
                      read_section(j, "optimizer",
                                   {{"lr", into(t.optimizer.lr)},
                                    {"beta1", into(t.optimizer.beta1)},
                                    {"beta2", into(t.optimizer.beta2)},
                                    {"eps", into(t.optimizer.eps)}});
                    }},
                   {"train",
                    [&](const json& j) {
                      read_section(j, "train",
                                   {{"epochs", into(t.epochs)}, {"batch_size", into(t.batch_size)}, {"patience", into(t.patience)}});
                    }},
                   {"par",
                    [&](const json& j) {
                      read_section(j, "par",
                                   {{"radius_m", into(c.par.radius_m)},
                                    {"release_min_deg", into(c.par.release_min_deg)},
                                    {"release_max_deg", into(c.par.release_max_deg)},
                                    {"empty_value_deg", into(c.par.empty_value_deg)}});
                    }},
                   {"infer",
                    [&](const json& j) {
                      read_section(j, "infer",
                                   {{"window", into(c.infer.window)},
                                    {"stride", into(c.infer.stride)},
                                    {"tta", into(c.infer.tta)},
                                    {"threshold", into(c.infer.threshold)}});
                    }},
                   {"eval", [&](const json& j) { read_section(j, "eval", {{"min_iou", into(c.min_iou)}}); }},
               });
  c.patches = resolve(c.patches, base_dir);
  c.scene = resolve(c.scene, base_dir);
  c.train.seed = c.seed;
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  const auto bytes = bytes::read_file(path);
  return from_json(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

SceneData load_scene(const fs::path& manifest, const topo::ParConfig& par, std::size_t pair_index, bool downsample) {
  const auto pairs = sarprep::pair_scenes(sarprep::read_manifest(manifest));
  if (pair_index >= pairs.size())
    throw ConfigError("manifest " + manifest.string() + " has " + std::to_string(pairs.size()) + " scene pairs, index " +
                      std::to_string(pair_index) + " requested");
  const auto& rec = pairs[pair_index];
  SceneData s;
  s.pair = sarprep::load_scene_pair(rec);
  const std::string dem_path = !rec.activity.dem_path.empty() ? rec.activity.dem_path : rec.reference.dem_path;
  if (dem_path.empty()) throw ConfigError("scene " + rec.activity.id + " has no dem_path");
  Raster dem = read_raster(dem_path);
  if (downsample) {
    s.pair.vv_ref = downsample2(s.pair.vv_ref);
    s.pair.vv_act = downsample2(s.pair.vv_act);
    s.pair.vh_ref = downsample2(s.pair.vh_ref);
    s.pair.vh_act = downsample2(s.pair.vh_act);
    if (!(dem.geometry() == s.pair.geometry())) dem = downsample2(dem);
  }
  require_same_geometry(s.pair.geometry(), dem.geometry(), "DEM of scene " + rec.activity.id);
  const Raster slope = topo::compute_slope(dem);
  const Raster par_raster = topo::par_fast(dem, topo::compute_release_mask(slope, par), par);
  s.stack = sarprep::build_feature_stack(s.pair, slope, par_raster);
  if (!rec.activity.labels_path.empty()) {
    Raster labels = read_raster(rec.activity.labels_path);
    require_same_geometry(s.pair.geometry(), labels.geometry(), "labels of scene " + rec.activity.id);
    eval::require_binary(labels, "labels");
    s.labels = std::move(labels);
  }
  return s;
}

train::Dataset load_patch_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "index.json")) throw ConfigError("patch archive not found: " + (dir / "index.json").string());
  train::Dataset d;
  for (auto& e : sarprep::read_patch_archive(dir)) (e.split == "val" ? d.validation : d.train).push_back(std::move(e.sample));
  return d;
}

ExperimentResult run_experiment(const RunConfig& cfg, const train::Dataset& data, const SceneData& scene) {
  cfg.validate();
  train::TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed;
  auto model = nn::Model<float>::build(cfg.model, cfg.seed);
  ExperimentResult r{train::train(std::move(model), data, tcfg,
                                  [](const train::EpochRecord& e) {
                                    log::event("epoch", {{"epoch", e.epoch},
                                                         {"loss", e.train_loss},
                                                         {"val_f1", e.validation_f1},
                                                         {"improved", e.improved}});
                                  }),
                     {}, {}, {}};
  r.soft = infer::segment_scene(r.training.model, scene.stack, cfg.infer.window, cfg.infer.stride, cfg.infer.tta);
  r.mask = infer::threshold_mask(r.soft, cfg.infer.threshold);
  if (scene.labels) r.report = eval::evaluate(r.mask, *scene.labels, cfg.min_iou);
  return r;
}

std::vector<AblationRow> ablation_rows(const nn::ModelConfig& base) {
  std::vector<AblationRow> rows;
  auto make = [&](std::string name, std::vector<Channel> sar, bool slope, nn::ParMode par) {
    AblationRow r;
    r.name = std::move(name);
    r.model = base;
    r.model.sar_channels = sar;
    r.model.use_slope = slope;
    r.model.par_mode = par;
    for (auto c : sar) r.marks[static_cast<std::size_t>(c)] = true;
    r.marks[3] = slope;
    r.marks[4] = par == nn::ParMode::concat;
    r.marks[5] = par == nn::ParMode::attention;
    rows.push_back(std::move(r));
  };
  const std::vector<Channel> sar3{Channel::vv, Channel::vh, Channel::vvvh};
  make("vv", {Channel::vv}, false, nn::ParMode::none);
  make("vv+vh", {Channel::vv, Channel::vh}, false, nn::ParMode::none);
  make("vv+vh+vvvh", sar3, false, nn::ParMode::none);
  make("+slope", sar3, true, nn::ParMode::none);
  make("+par", sar3, true, nn::ParMode::concat);
  make("+par_attention", sar3, true, nn::ParMode::attention);
  return rows;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace

std::string ablation_markdown(const AblationTable& table) {
  std::string out = "| VV | VH | VVVH | Slope | PAR | PAR (attn.) | F1 (%) |\n|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out += "|";
    for (bool m : table.rows[i].marks) out += m ? " ✓ |" : "   |";
    const auto& f = table.f1[i];
    out += " " + fixed(100.0 * mean(f), 1) + " ± " + fixed(100.0 * stddev(f), 1) + " |\n";
  }
  return out;
}

std::string ablation_csv(const AblationTable& table) {
  std::string out = "row,vv,vh,vvvh,slope,par,par_attention,seeds,f1_mean,f1_std\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out += table.rows[i].name;
    for (bool m : table.rows[i].marks) out += m ? ",1" : ",0";
    out += "," + std::to_string(table.f1[i].size()) + "," + fixed(mean(table.f1[i]), 6) + "," +
           fixed(stddev(table.f1[i]), 6) + "\n";
  }
  return out;
}

AblationTable run_ablation(const RunConfig& cfg, const train::Dataset& data, const SceneData& scene, std::size_t seeds,
                           const fs::path& runs_csv) {
  if (seeds == 0) throw ConfigError("ablation needs at least one seed");
  if (!scene.labels) throw ConfigError("ablation scene has no labels");
  AblationTable table;
  table.rows = ablation_rows(cfg.model);
  table.f1.resize(table.rows.size());
  if (!runs_csv.empty()) {
    std::ofstream out(runs_csv);
    if (!out) throw IoError("cannot write " + runs_csv.string());
    out << "row,seed_index,seed,f1\n";
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t s = 0; s < seeds; ++s) {
      RunConfig run = cfg;
      run.model = table.rows[r].model;
      run.seed = derive_seed(cfg.seed, r, s);
      const auto result = run_experiment(run, data, scene);
      const double f1 = result.report->pixel.f1;
      table.f1[r].push_back(f1);
      log::event("ablation_run", {{"row", table.rows[r].name}, {"seed_index", s}, {"f1", f1}});
      if (!runs_csv.empty()) {
        std::ofstream out(runs_csv, std::ios::app);
        out << table.rows[r].name << "," << s << "," << run.seed << "," << fixed(f1, 6) << "\n";
      }
    }
  }
  return table;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : RunConfig::load(path);
}

void write_overlay(const SceneData& scene, const Raster& mask, const fs::path& path) {
  auto img = sarprep::rgb_composite(scene.pair);
  sarprep::draw_mask_contours(img, mask);
  sarprep::write_png(img, path);
}

struct Options {
  // synth
  synth::SynthConfig synth;
  std::size_t scenes = 10, patch = 64;
  // shared
  std::string config, out, dem, labels, manifest, patches, weights, scene, pred, truth, report, csv, history, mask;
  std::string hist_out;
  double bin_width = 1.0;
  bool brute_force = false, downsample = false, tta = false, no_tta = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, window, stride, pair_index, seeds;
  std::optional<double> threshold, min_iou, radius_m, release_min, release_max;
  double val_fraction = 0.1;
  std::string out_mask, out_overlay;
};

void apply_par_flags(const Options& o, topo::ParConfig& p) {
  if (o.radius_m) p.radius_m = *o.radius_m;
  if (o.release_min) p.release_min_deg = *o.release_min;
  if (o.release_max) p.release_max_deg = *o.release_max;
  p.validate();
}

void cmd_synth(const Options& o) {
  synth::SynthConfig cfg = o.synth;
  if (o.seed) cfg.seed = *o.seed;
  if (o.out.empty()) throw ConfigError("synth needs --out");
  const auto s = synth::synth_dataset(cfg, o.scenes, o.out, o.patch, o.val_fraction);
  log::event("synth_done", {{"scenes", s.scenes},
                            {"planted", s.planted},
                            {"train_patches", s.train_patches},
                            {"val_patches", s.validation_patches}});
}

void cmd_topo(const Options& o, bool par) {
  if (o.dem.empty() || o.out.empty()) throw ConfigError("topo needs --dem and --out");
  RunConfig rc = config_or_default(o.config);
  topo::ParConfig pc = rc.par;
  apply_par_flags(o, pc);
  const Raster dem = read_raster(o.dem);
  Raster result = topo::compute_slope(dem);
  if (par) {
    const auto mask = topo::compute_release_mask(result, pc);
    result = o.brute_force ? topo::par_bruteforce(dem, mask, pc) : topo::par_fast(dem, mask, pc);
  }
  write_raster(result, o.out);
  if (!o.labels.empty()) {
    const Raster labels = read_raster(o.labels);
    const std::string csv = topo::histogram_csv(topo::class_histograms(result, labels, o.bin_width));
    if (o.hist_out.empty()) std::cout << csv;
    else write_text(o.hist_out, csv);
  }
}

void cmd_prep(const Options& o) {
  if (o.manifest.empty() || o.out.empty()) throw ConfigError("prep needs --manifest and --out");
  RunConfig rc = config_or_default(o.config);
  topo::ParConfig pc = rc.par;
  apply_par_flags(o, pc);
  const auto pairs = sarprep::pair_scenes(sarprep::read_manifest(o.manifest));
  std::vector<sarprep::PatchSample> patches;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SceneData s = load_scene(o.manifest, pc, i, o.downsample);
    const std::string id = pairs[i].activity.id;
    sarprep::write_feature_stack(s.stack, fs::path(o.out) / "features", id);
    log::event("prep_scene", {{"scene", id}, {"labels", s.labels.has_value()}});
    if (s.labels) {
      auto p = sarprep::extract_training_patches(s.stack, *s.labels, o.patch, true, id);
      for (auto& x : p) patches.push_back(std::move(x));
    }
  }
  if (patches.empty()) return;
  auto split = train::split_dataset(std::move(patches), o.val_fraction, o.seed.value_or(rc.seed));
  std::vector<sarprep::PatchArchiveEntry> entries;
  for (auto& p : split.train) entries.push_back({std::move(p), "train"});
  for (auto& p : split.validation) entries.push_back({std::move(p), "val"});
  sarprep::write_patch_archive(entries, fs::path(o.out) / "patches");
}

RunConfig run_config(const Options& o) {
  RunConfig rc = config_or_default(o.config);
  if (o.seed) rc.seed = *o.seed;
  if (o.epochs) rc.train.epochs = *o.epochs;
  if (!o.patches.empty()) rc.patches = o.patches;
  if (!o.scene.empty()) rc.scene = o.scene;
  if (o.window) rc.infer.window = *o.window;
  if (o.stride) rc.infer.stride = *o.stride;
  else if (o.window) rc.infer.stride = *o.window / 2;
  if (o.tta) rc.infer.tta = true;
  if (o.no_tta) rc.infer.tta = false;
  if (o.threshold) rc.infer.threshold = *o.threshold;
  if (o.min_iou) rc.min_iou = *o.min_iou;
  apply_par_flags(o, rc.par);
  rc.train.seed = rc.seed;
  rc.validate();
  return rc;
}

void cmd_train(const Options& o) {
  const RunConfig rc = run_config(o);
  if (rc.patches.empty()) throw ConfigError("train needs --patches (or data.patches in the config)");
  if (o.out.empty()) throw ConfigError("train needs --out");
  const auto data = load_patch_dataset(rc.patches);
  auto model = nn::Model<float>::build(rc.model, rc.seed);
  const auto result = train::train(std::move(model), data, rc.train, [](const train::EpochRecord& e) {
    log::event("epoch", {{"epoch", e.epoch}, {"loss", e.train_loss}, {"val_f1", e.validation_f1}, {"improved", e.improved}});
  });
  nn::save_weights(result.model, o.out);
  if (!o.history.empty()) {
    std::string csv = "epoch,train_loss,val_f1,improved\n";
    for (const auto& e : result.history)
      csv += std::to_string(e.epoch) + "," + json(e.train_loss).dump() + "," + json(e.validation_f1).dump() + "," +
             (e.improved ? "1" : "0") + "\n";
    write_text(o.history, csv);
  }
  log::event("train_done", {{"best_epoch", result.best_epoch}, {"best_val_f1", result.best_validation_f1}});
}

void cmd_infer(const Options& o) {
  if (o.weights.empty()) throw ConfigError("infer needs --weights");
  if (!fs::exists(o.weights)) throw ConfigError("weight file not found: " + o.weights);
  RunConfig rc = run_config(o);
  if (rc.scene.empty()) throw ConfigError("infer needs --scene");
  if (o.out.empty() && o.out_mask.empty() && o.out_overlay.empty())
    throw ConfigError("infer needs at least one of --out, --out-mask, --out-overlay");
  auto model = nn::load_weights(o.weights);
  if (rc.infer.window % model.config().size_multiple() != 0)
    throw ConfigError("window not divisible by the model's size multiple");
  const SceneData scene = load_scene(rc.scene, rc.par, o.pair_index.value_or(0), o.downsample);
  const Raster soft = infer::segment_scene(model, scene.stack, rc.infer.window, rc.infer.stride, rc.infer.tta);
  const Raster mask = infer::threshold_mask(soft, rc.infer.threshold);
  if (!o.out.empty()) write_raster(soft, o.out);
  if (!o.out_mask.empty()) write_raster(mask, o.out_mask);
  if (!o.out_overlay.empty()) write_overlay(scene, mask, o.out_overlay);
  log::event("infer_done", {{"windows", infer::tile_windows(soft.geometry(), rc.infer.window, rc.infer.stride).size()}});
}

void cmd_eval(const Options& o) {
  if (o.pred.empty() || o.truth.empty()) throw ConfigError("eval needs --pred and --truth");
  for (const auto& p : {o.pred, o.truth})
    if (!fs::exists(p)) throw ConfigError("mask not found: " + p);
  RunConfig rc = run_config(o);
  const auto report = eval::evaluate(read_raster(o.pred), read_raster(o.truth), rc.min_iou);
  if (!o.report.empty()) write_text(o.report, eval::report_json(report) + "\n");
  if (!o.csv.empty()) {
    const bool fresh = !fs::exists(o.csv);
    std::ofstream out(o.csv, std::ios::app);
    if (!out) throw IoError("cannot write " + o.csv);
    if (fresh) out << eval::report_csv_header() << "\n";
    out << eval::report_csv_row(fs::path(o.pred).stem().string(), report) << "\n";
  }
  std::cout << eval::report_table_row(report) << "\n";
}

void cmd_ablate(const Options& o) {
  RunConfig rc = run_config(o);
  if (rc.patches.empty() || rc.scene.empty()) throw ConfigError("ablate needs --patches and --scene");
  if (o.out.empty()) throw ConfigError("ablate needs --out");
  fs::create_directories(o.out);
  const auto data = load_patch_dataset(rc.patches);
  const SceneData scene = load_scene(rc.scene, rc.par, o.pair_index.value_or(0), o.downsample);
  const auto table = run_ablation(rc, data, scene, o.seeds.value_or(3), fs::path(o.out) / "runs.csv");
  write_text(fs::path(o.out) / "ablation.md", ablation_markdown(table));
  write_text(fs::path(o.out) / "ablation.csv", ablation_csv(table));
  std::cout << ablation_markdown(table);
}

void cmd_composite(const Options& o) {
  if (o.scene.empty() || o.out.empty()) throw ConfigError("composite needs --scene and --out");
  const auto pairs = sarprep::pair_scenes(sarprep::read_manifest(o.scene));
  const std::size_t idx = o.pair_index.value_or(0);
  if (idx >= pairs.size()) throw ConfigError("pair index out of range");
  const auto pair = sarprep::load_scene_pair(pairs[idx]);
  auto img = sarprep::rgb_composite(pair);
  if (!o.mask.empty()) sarprep::draw_mask_contours(img, read_raster(o.mask));
  sarprep::write_png(img, o.out);
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Avalanche segmentation from SAR change rasters and terrain features", "avaseg"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Random seed"); };
  auto add_par = [&](CLI::App* c) {
    c->add_option("--radius-m", o.radius_m, "PAR search radius in meters");
    c->add_option("--release-min-deg", o.release_min, "Lowest release slope");
    c->add_option("--release-max-deg", o.release_max, "Steepest release slope");
  };
  auto add_infer = [&](CLI::App* c) {
    c->add_option("--window", o.window, "Window size in pixels");
    c->add_option("--stride", o.stride, "Window stride (default window/2)");
    c->add_flag("--tta", o.tta, "Dihedral test-time augmentation");
    c->add_flag("--no-tta", o.no_tta, "Disable test-time augmentation");
    c->add_option("--threshold", o.threshold, "Mask threshold");
    c->add_option("--pair-index", o.pair_index, "Scene pair within the manifest");
    c->add_flag("--downsample", o.downsample, "Halve the resolution of SAR and DEM rasters");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--size", o.synth.size, "Scene size in pixels");
  synth->add_option("--scenes", o.scenes, "Number of scenes (the last one is held out)");
  synth->add_option("--avalanches", o.synth.n_avalanches, "Avalanches per scene");
  synth->add_option("--distractors", o.synth.n_distractors, "Unlabeled change blobs per scene");
  synth->add_option("--relief", o.synth.relief_amplitude, "Relief amplitude in meters");
  synth->add_option("--roughness", o.synth.roughness, "Spectral exponent");
  synth->add_option("--valley-exponent", o.synth.valley_exponent, "Height shaping exponent");
  synth->add_option("--cell-size", o.synth.cell_size, "Cell size in meters");
  synth->add_option("--gain-db", o.synth.debris_gain_db, "Debris backscatter gain");
  synth->add_option("--noise-db", o.synth.noise_db, "Backscatter noise std");
  synth->add_option("--patch", o.patch, "Patch size");
  synth->add_option("--val-fraction", o.val_fraction, "Validation fraction");
  synth->add_option("--out", o.out, "Output directory")->required();
  add_seed(synth);

  auto* topo_cmd = app.add_subcommand("topo", "Terrain features");
  topo_cmd->require_subcommand(1);
  auto* slope = topo_cmd->add_subcommand("slope", "Slope angle in degrees");
  auto* par = topo_cmd->add_subcommand("par", "Potential angle of reach in degrees");
  for (auto* c : {slope, par}) {
    c->add_option("--dem", o.dem, "DEM raster")->required();
    c->add_option("--out", o.out, "Output raster")->required();
    c->add_option("--config", o.config, "Run config JSON");
    c->add_option("--hist-against", o.labels, "Label raster for class histograms");
    c->add_option("--hist-out", o.hist_out, "Histogram CSV path (default stdout)");
    c->add_option("--bin-width", o.bin_width, "Histogram bin width in degrees");
  }
  add_par(par);
  par->add_flag("--brute-force", o.brute_force, "Exhaustive reference computation");

  auto* prep = app.add_subcommand("prep", "Feature stacks and training patches from a scene manifest");
  prep->add_option("--manifest", o.manifest, "Scene manifest")->required();
  prep->add_option("--out", o.out, "Output directory")->required();
  prep->add_option("--config", o.config, "Run config JSON");
  prep->add_option("--patch", o.patch, "Patch size");
  prep->add_option("--val-fraction", o.val_fraction, "Validation fraction");
  prep->add_flag("--downsample", o.downsample, "Halve the resolution of SAR and DEM rasters");
  add_par(prep);
  add_seed(prep);

  auto* train_cmd = app.add_subcommand("train", "Train a model on a patch archive");
  train_cmd->add_option("--config", o.config, "Run config JSON");
  train_cmd->add_option("--patches", o.patches, "Patch archive directory");
  train_cmd->add_option("--out", o.out, "Weight file")->required();
  train_cmd->add_option("--history", o.history, "Per-epoch CSV");
  train_cmd->add_option("--epochs", o.epochs, "Maximum epochs");
  add_seed(train_cmd);

  auto* infer_cmd = app.add_subcommand("infer", "Segment a scene");
  infer_cmd->add_option("--config", o.config, "Run config JSON");
  infer_cmd->add_option("--weights", o.weights, "Weight file")->required();
  infer_cmd->add_option("--scene", o.scene, "Scene manifest");
  infer_cmd->add_option("--out", o.out, "Soft output raster");
  infer_cmd->add_option("--out-mask", o.out_mask, "Binary mask raster");
  infer_cmd->add_option("--out-overlay", o.out_overlay, "PNG overlay");
  add_infer(infer_cmd);
  add_par(infer_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Compare a predicted mask with ground truth");
  eval_cmd->add_option("--config", o.config, "Run config JSON");
  eval_cmd->add_option("--pred", o.pred, "Predicted mask")->required();
  eval_cmd->add_option("--truth", o.truth, "Ground-truth mask")->required();
  eval_cmd->add_option("--min-iou", o.min_iou, "Minimum box IoU for a match");
  eval_cmd->add_option("--report", o.report, "Report JSON");
  eval_cmd->add_option("--csv", o.csv, "CSV file, one row appended per call");

  auto* ablate = app.add_subcommand("ablate", "Channel ablation table");
  ablate->add_option("--config", o.config, "Run config JSON");
  ablate->add_option("--patches", o.patches, "Patch archive directory");
  ablate->add_option("--scene", o.scene, "Held-out scene manifest");
  ablate->add_option("--seeds", o.seeds, "Seeds per row");
  ablate->add_option("--epochs", o.epochs, "Maximum epochs");
  ablate->add_option("--out", o.out, "Output directory")->required();
  add_infer(ablate);
  add_seed(ablate);

  auto* composite = app.add_subcommand("composite", "RGB composite of a scene pair");
  composite->add_option("--scene", o.scene, "Scene manifest")->required();
  composite->add_option("--mask", o.mask, "Mask whose contours are drawn");
  composite->add_option("--pair-index", o.pair_index, "Scene pair within the manifest");
  composite->add_option("--out", o.out, "PNG path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (synth->parsed()) cmd_synth(o);
    else if (slope->parsed()) cmd_topo(o, false);
    else if (par->parsed()) cmd_topo(o, true);
    else if (prep->parsed()) cmd_prep(o);
    else if (train_cmd->parsed()) cmd_train(o);
    else if (infer_cmd->parsed()) cmd_infer(o);
    else if (eval_cmd->parsed()) cmd_eval(o);
    else if (ablate->parsed()) cmd_ablate(o);
    else if (composite->parsed()) cmd_composite(o);
  } catch (const ConfigError& e) {
    log::event("error", {{"kind", "config"}, {"message", e.what()}});
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    log::event("error", {{"kind", "runtime"}, {"message", e.what()}});
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace avaseg::cli
