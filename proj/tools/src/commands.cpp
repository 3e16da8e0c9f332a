// Copyright 2026 The tilscore Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tilscore_cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tilscore/error.hpp"
#include "tilscore/metrics.hpp"
#include "tilscore/parallel.hpp"
#include "tilscore/raster_io.hpp"
#include "tilscore/survival.hpp"
#include "tilscore/tils_scoring.hpp"
#include "tilscore_cli/config.hpp"
#include "tilscore_cli/synth.hpp"

#ifndef TILSCORE_VERSION
#define TILSCORE_VERSION "0.0.0"
#endif

namespace tilscore::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kManifestName[] = "run_manifest.json";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

/// Run record; holds no timestamps so repeated runs compare equal.
class Manifest {
 public:
  explicit Manifest(std::string command) {
    j_["tool"] = "tilscore";
    j_["version"] = TILSCORE_VERSION;
    j_["command"] = std::move(command);
    j_["inputs"] = json::object();
    j_["outputs"] = json::array();
    j_["warnings"] = json::array();
  }

  void input(const std::string& name, const fs::path& path) {
    json entry{{"path", path.generic_string()}};
    if (fs::is_regular_file(path)) {
      const auto bytes = read_file_bytes(path);
      entry["fnv1a64"] = hex64(fnv1a64({reinterpret_cast<const char*>(bytes.data()), bytes.size()}));
    }
    j_["inputs"][name] = std::move(entry);
  }

  void config(const RunConfig& cfg) {
    const std::string text = serialize_config(cfg);
    j_["config_hash"] = hex64(fnv1a64(text));
    j_["defaults_applied"] = cfg.defaults_applied;
  }

  void output(const std::string& name) { j_["outputs"].push_back(name); }
  void warning(const std::string& w) { j_["warnings"].push_back(w); }
  void set(const std::string& key, json value) { j_[key] = std::move(value); }

  void finish(int code, const std::string& stage, const std::string& message) {
    j_["exit_code"] = code;
    j_["status"] = code == kExitOk ? "ok" : "error";
    if (code != kExitOk) {
      j_["failed_stage"] = stage;
      j_["error"] = message;
    }
  }

  void write(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return;
    try {
      write_text(dir / kManifestName, j_.dump(2) + "\n");
    } catch (const Error&) {
    }
  }

 private:
  json j_;
};

bool is_validation(const std::exception& e) {
  return dynamic_cast<const ValidationError*>(&e) != nullptr || dynamic_cast<const ShapeError*>(&e) != nullptr ||
         dynamic_cast<const EmptyRasterError*>(&e) != nullptr || dynamic_cast<const DecodeError*>(&e) != nullptr;
}

/// Runs `body`, mapping exceptions to exit codes and recording the outcome.
template <typename F>
int guarded(const std::string& command, Manifest& manifest, const fs::path& out, std::ostream& diag, F&& body) {
  std::string stage = "arguments";
  int code = kExitOk;
  std::string message;
  try {
    body(stage);
  } catch (const std::exception& e) {
    code = is_validation(e) ? kExitValidation : kExitRuntime;
    message = e.what();
    diag << "tilscore " << command << ": " << stage << ": " << message << "\n";
  }
  manifest.finish(code, stage, message);
  if (!out.empty()) manifest.write(out);
  return code;
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw ValidationError(std::string("missing --") + what);
  if (!fs::is_regular_file(p)) throw ValidationError(std::string(what) + " not found: " + p.string());
}

BinaryMask load_tissue(const fs::path& path, const ImageU8& slide, Manifest& manifest) {
  auto loaded = load_raster(path);
  ImageU8 mask = std::move(loaded.raster);
  if (mask.channels() != 1) throw ShapeError("tissue mask must be single-channel");
  if (loaded.default_resolution) mask.set_resolution(slide.resolution());
  require_same_extent(slide, mask, "tissue mask");
  std::size_t nonbinary = 0;
  for (auto& v : mask.data()) {
    if (v > 1) ++nonbinary;
    v = v != 0 ? 1 : 0;
  }
  if (nonbinary > 0) manifest.warning("tissue_mask_binarized");
  return mask;
}

LabelMask to_label_png(const LabelMask& labels) { return labels; }

}  // namespace

int cmd_run(const RunOptions& opts, std::ostream& diag) {
  const std::string command = "run " + opts.subcommand;
  Manifest manifest(command);
  return guarded(command, manifest, opts.out, diag, [&](std::string& stage) {
    if (opts.subcommand != "segment" && opts.subcommand != "detect" && opts.subcommand != "score") {
      throw ValidationError("unknown run subcommand '" + opts.subcommand + "'");
    }
    if (opts.out.empty()) throw ValidationError("missing --out");
    fs::create_directories(opts.out);

    stage = "config";
    if (!opts.config.empty()) require_file(opts.config, "config");
    const RunConfig cfg = load_config(opts.config);
    manifest.config(cfg);
    manifest.input("config", opts.config);
    set_max_threads(opts.threads);

    stage = "load";
    require_file(opts.slide, "slide");
    require_file(opts.tissue_mask, "tissue-mask");
    manifest.input("slide", opts.slide);
    manifest.input("tissue_mask", opts.tissue_mask);
    auto slide_loaded = load_raster(opts.slide);
    const ImageU8 slide = std::move(slide_loaded.raster);
    if (slide_loaded.default_resolution) manifest.warning("default_resolution");
    const BinaryMask tissue = load_tissue(opts.tissue_mask, slide, manifest);

    if (opts.subcommand == "segment") {
      stage = "segmentation";
      const auto preds = build_predictors(cfg, Task::segmentation, opts.slide);
      const SegmentationMaps maps = segment_slide(slide, tissue, preds, cfg.pipeline.segmentation);
      if (maps.empty_tissue) manifest.warning("empty_tissue");
      if (maps.dropped_odd_edge) manifest.warning("odd_edge_dropped_in_downsampling");
      const LabelMask labels = finalize_segmentation(maps.tumor, maps.stroma, tissue, cfg.pipeline.segmentation);
      stage = "write";
      save_raster(to_label_png(labels), opts.out / "segmentation.png");
      manifest.output("segmentation.png");
      if (opts.save_probabilities) {
        // Inference resolution; the sidecar records it.
        save_raster(quantize_probability(maps.tumor), opts.out / "tumor_probability.png");
        save_raster(quantize_probability(maps.stroma), opts.out / "stroma_probability.png");
        for (const char* f : {"tumor_probability.png", "tumor_probability.res", "stroma_probability.png",
                              "stroma_probability.res"}) {
          manifest.output(f);
        }
      }
      return;
    }
    if (opts.subcommand == "detect") {
      stage = "detection";
      const auto preds = build_predictors(cfg, Task::detection, opts.slide);
      auto dets = run_detection(slide, tissue, preds, cfg.pipeline.detection);
      stage = "write";
      write_detections_csv(opts.out / "detections.csv", std::move(dets));
      manifest.output("detections.csv");
      return;
    }

    stage = "score";
    CasePredictors preds{build_predictors(cfg, Task::segmentation, opts.slide),
                         build_predictors(cfg, Task::detection, opts.slide)};
    CaseOutputs result = run_case(slide, tissue, preds, cfg.pipeline);
    for (const auto& w : result.warnings) manifest.warning(w);
    manifest.set("branch", std::string(branch_name(result.route.branch)));
    manifest.set("tissue_area_mm2", result.route.tissue_area_mm2);

    stage = "write";
    save_raster(to_label_png(result.segmentation), opts.out / "segmentation.png");
    manifest.output("segmentation.png");
    write_detections_csv(opts.out / "detections.csv", std::move(result.detections));
    manifest.output("detections.csv");
    if (result.report) {
      write_text(opts.out / "tils_report.json", tils_report_json(*result.report));
      manifest.output("tils_report.json");
      manifest.set("bulk_area_mm2", result.report->bulk_area_mm2);
      manifest.set("report_flags", result.report->flags);
    }
  });
}

namespace {

/// File name -> path for `dir` (every regular file with `ext`) or a single file.
std::map<std::string, fs::path> list_cases(const fs::path& p, const std::string& ext, const char* what) {
  std::map<std::string, fs::path> out;
  if (fs::is_regular_file(p)) {
    out[p.filename().string()] = p;
    return out;
  }
  if (!fs::is_directory(p)) throw ValidationError(std::string(what) + " not found: " + p.string());
  for (const auto& entry : fs::directory_iterator(p)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out[entry.path().filename().string()] = entry.path();
  }
  return out;
}

std::vector<std::pair<fs::path, fs::path>> pair_cases(const std::map<std::string, fs::path>& pred,
                                                      const std::map<std::string, fs::path>& gt) {
  std::vector<std::string> orphans;
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (pred.size() == 1 && gt.size() == 1) {
    pairs.emplace_back(pred.begin()->second, gt.begin()->second);
    return pairs;
  }
  for (const auto& [name, path] : pred) {
    const auto it = gt.find(name);
    if (it == gt.end()) {
      orphans.push_back("pred:" + name);
    } else {
      pairs.emplace_back(path, it->second);
    }
  }
  for (const auto& [name, path] : gt) {
    if (!pred.contains(name)) orphans.push_back("gt:" + name);
  }
  if (!orphans.empty()) {
    std::string msg = "unpaired files:";
    for (const auto& o : orphans) msg += " " + o;
    throw ValidationError(msg);
  }
  if (pairs.empty()) throw ValidationError("no cases to evaluate");
  return pairs;
}

std::vector<std::vector<std::string>> read_table(const fs::path& path, const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  std::vector<std::size_t> index;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (header) {
      for (const auto& col : columns) {
        const auto it = std::find(cells.begin(), cells.end(), col);
        if (it == cells.end()) throw ValidationError(path.string() + ": missing column '" + col + "'");
        index.push_back(static_cast<std::size_t>(it - cells.begin()));
      }
      header = false;
      continue;
    }
    std::vector<std::string> row;
    for (const auto i : index) {
      if (i >= cells.size()) throw ValidationError(path.string() + ": short row '" + line + "'");
      row.push_back(cells[i]);
    }
    rows.push_back(std::move(row));
  }
  if (header) throw ValidationError(path.string() + ": missing header");
  return rows;
}

double parse_number(const std::string& s, const fs::path& file) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    throw ValidationError(file.string() + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

std::map<std::string, double> read_case_scores(const fs::path& path) {
  std::map<std::string, double> out;
  for (const auto& row : read_table(path, {"case_id", "score"})) {
    if (!out.emplace(row[0], parse_number(row[1], path)).second) {
      throw ValidationError(path.string() + ": duplicate case_id '" + row[0] + "'");
    }
  }
  return out;
}

std::vector<SurvivalRecord> read_survival(const fs::path& path) {
  std::vector<SurvivalRecord> out;
  for (const auto& row : read_table(path, {"case_id", "risk", "time", "event"})) {
    SurvivalRecord r;
    r.risk_score = parse_number(row[1], path);
    r.time = parse_number(row[2], path);
    if (row[3] != "0" && row[3] != "1") throw ValidationError(path.string() + ": event must be 0 or 1");
    r.event = row[3] == "1";
    out.push_back(r);
  }
  validate(std::span<const SurvivalRecord>(out));
  return out;
}

json eval_seg(const EvalOptions& opts, Manifest&) {
  const auto pairs = pair_cases(list_cases(opts.pred, ".png", "pred"), list_cases(opts.gt, ".png", "gt"));
  json cases = json::array();
  double sum = 0.0;
  for (const auto& [p, g] : pairs) {
    const LabelMask pred = load_raster(p).raster;
    const LabelMask gt = load_raster(g).raster;
    validate_label_mask(pred);
    validate_label_mask(gt);
    const double d = tumor_stroma_dice(pred, gt);
    sum += d;
    cases.push_back({{"case", p.filename().string()}, {"tumor_stroma_dice", d}});
  }
  return {{"task", "seg"}, {"cases", cases}, {"mean_tumor_stroma_dice", sum / static_cast<double>(pairs.size())}};
}

json eval_det(const EvalOptions& opts, const RunConfig& cfg, Manifest& manifest) {
  const auto pairs = pair_cases(list_cases(opts.pred, ".csv", "pred"), list_cases(opts.gt, ".csv", "gt"));
  std::vector<FrocCase> froc_cases;
  json cases = json::array();
  MatchResult pooled;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (const auto& [p, g] : pairs) {
    FrocCase c;
    c.predictions = read_detections_csv(p);
    c.ground_truth = read_points_csv(g);
    c.resolution = Resolution{cfg.metrics.mpp, cfg.metrics.mpp};
    c.area_mm2 = cfg.metrics.default_area_mm2;
    if (!opts.tissue_masks.empty()) {
      const fs::path mask_path = opts.tissue_masks / (p.stem().string() + ".png");
      require_file(mask_path, "tissue mask");
      const auto loaded = load_raster(mask_path);
      c.resolution = loaded.raster.resolution();
      c.area_mm2 = tissue_area_mm2(loaded.raster, c.resolution);
      if (loaded.default_resolution) manifest.warning("default_resolution:" + mask_path.filename().string());
    }
    const MatchResult m = match_detections(c.predictions, c.ground_truth, cfg.metrics.hit_radius_um, c.resolution);
    tp += m.tp();
    fp += m.fp();
    fn += m.fn();
    cases.push_back({{"case", p.filename().string()},
                     {"tp", m.tp()},
                     {"fp", m.fp()},
                     {"fn", m.fn()},
                     {"f1", detection_f1(m)},
                     {"area_mm2", c.area_mm2}});
    froc_cases.push_back(std::move(c));
  }
  const double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fp) + static_cast<double>(fn);
  const double f1 = denom == 0.0 ? 1.0 : 2.0 * static_cast<double>(tp) / denom;
  json report{{"task", "det"},
              {"cases", cases},
              {"f1", f1},
              {"hit_radius_um", cfg.metrics.hit_radius_um},
              {"fp_rates_per_mm2", cfg.metrics.fp_rates}};
  const FrocResult fr = froc(froc_cases, cfg.metrics.fp_rates, cfg.metrics.hit_radius_um);
  report["froc"] = fr.score;
  report["froc_sensitivities"] = fr.sensitivities;
  return report;
}

json eval_tils(const EvalOptions& opts) {
  require_file(opts.pred, "pred");
  require_file(opts.gt, "gt");
  const auto pred = read_case_scores(opts.pred);
  const auto gt = read_case_scores(opts.gt);
  std::vector<std::string> orphans;
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [id, v] : pred) {
    const auto it = gt.find(id);
    if (it == gt.end()) {
      orphans.push_back("pred:" + id);
    } else {
      x.push_back(v);
      y.push_back(it->second);
    }
  }
  for (const auto& [id, v] : gt) {
    if (!pred.contains(id)) orphans.push_back("gt:" + id);
  }
  if (!orphans.empty()) {
    std::string msg = "unpaired cases:";
    for (const auto& o : orphans) msg += " " + o;
    throw ValidationError(msg);
  }
  return {{"task", "tils"}, {"n", x.size()}, {"pearson_r", pearson_r(x, y)}};
}

json eval_survival(const EvalOptions& opts, Manifest& manifest) {
  require_file(opts.pred, "pred");
  const auto records = read_survival(opts.pred);
  json report{{"task", "survival"}, {"n", records.size()}, {"c_index", concordance_index(records)}};
  try {
    const CoxFit fit = cox_fit_single(records);
    report["cox_beta"] = fit.beta;
    report["cox_log_partial_likelihood"] = fit.log_partial_likelihood;
  } catch (const DivergingBetaError& e) {
    report["cox_beta"] = nullptr;
    manifest.warning(std::string("cox_diverging_beta: ") + e.what());
  }
  return report;
}

}  // namespace

int cmd_eval(const EvalOptions& opts, std::ostream& diag) {
  const std::string command = "eval " + opts.task;
  Manifest manifest(command);
  return guarded(command, manifest, opts.out, diag, [&](std::string& stage) {
    if (opts.task != "seg" && opts.task != "det" && opts.task != "tils" && opts.task != "survival") {
      throw ValidationError("unknown eval task '" + opts.task + "'");
    }
    if (opts.out.empty()) throw ValidationError("missing --out");
    if (opts.pred.empty()) throw ValidationError("missing --pred");
    if (opts.gt.empty() && opts.task != "survival") throw ValidationError("missing --gt");
    fs::create_directories(opts.out);

    stage = "config";
    if (!opts.config.empty()) require_file(opts.config, "config");
    const RunConfig cfg = load_config(opts.config);
    manifest.config(cfg);
    manifest.input("config", opts.config);
    manifest.input("pred", opts.pred);
    if (!opts.gt.empty()) manifest.input("gt", opts.gt);

    stage = "evaluate";
    json report;
    if (opts.task == "seg") {
      report = eval_seg(opts, manifest);
    } else if (opts.task == "det") {
      report = eval_det(opts, cfg, manifest);
    } else if (opts.task == "tils") {
      report = eval_tils(opts);
    } else {
      report = eval_survival(opts, manifest);
    }
    stage = "write";
    write_text(opts.out / "metrics.json", report.dump(2) + "\n");
    manifest.output("metrics.json");
  });
}

int cmd_synth(const SynthOptions& opts, std::ostream& diag) {
  const std::string command = "synth " + opts.scenario;
  Manifest manifest(command);
  manifest.set("seed", opts.seed);
  return guarded(command, manifest, opts.out, diag, [&](std::string& stage) {
    if (opts.out.empty()) throw ValidationError("missing --out");
    stage = "generate";
    for (const auto& f : run_synth(opts.scenario, opts.seed, opts.out)) manifest.output(f);
  });
}

int main_entry(int argc, const char* const* argv) {
  CLI::App app{"Tumor-infiltrating lymphocyte scoring pipeline", "tilscore"};
  app.set_version_flag("--version", TILSCORE_VERSION);
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run segmentation, detection or full scoring on one slide");
  run_cmd->add_option("subcommand", run.subcommand, "segment | detect | score")
      ->required()
      ->check(CLI::IsMember({"segment", "detect", "score"}));
  run_cmd->add_option("--slide", run.slide, "RGB slide PNG (resolution from the .res sidecar)")->required();
  run_cmd->add_option("--tissue-mask", run.tissue_mask, "Binary tissue mask PNG")->required();
  run_cmd->add_option("--config", run.config, "key = value config file");
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--threads", run.threads, "Worker cap, 0 = auto");
  run_cmd->add_flag("--save-probabilities", run.save_probabilities,
                    "segment: also write tumor/stroma probability PNGs (255 * p)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  eval_cmd->add_option("task", eval.task, "seg | det | tils | survival")
      ->required()
      ->check(CLI::IsMember({"seg", "det", "tils", "survival"}));
  eval_cmd->add_option("--pred", eval.pred, "Prediction file or directory")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth file or directory");
  eval_cmd->add_option("--config", eval.config, "key = value config file");
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--tissue-masks", eval.tissue_masks, "det: directory of <case>.png tissue masks");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic bundle");
  synth_cmd->add_option("scenario", synth.scenario, "roi_small | slide_l2 | detection_blobs | survival_cohort")
      ->required()
      ->check(CLI::IsMember(synth_scenarios()));
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (run_cmd->parsed()) return cmd_run(run, std::cerr);
  if (eval_cmd->parsed()) return cmd_eval(eval, std::cerr);
  return cmd_synth(synth, std::cerr);
}

}  // namespace tilscore::cli
