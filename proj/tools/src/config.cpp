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

#include "tilscore_cli/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "tilscore/error.hpp"

namespace tilscore::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError(std::string(key) + ": cannot parse '" + std::string(value) + "' as " + std::string(expected));
}

int to_int(std::string_view key, std::string_view v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) bad_value(key, v, "integer");
  return out;
}

std::int64_t to_int64(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty()) bad_value(key, v, "integer");
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(out)) bad_value(key, v, "number");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "boolean");
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (const auto part : split(v, ',')) out.push_back(to_double(key, part));
  return out;
}

std::vector<std::string> to_models(std::string_view key, std::string_view v) {
  std::vector<std::string> out;
  for (const auto part : split(v, ',')) {
    if (part.empty()) bad_value(key, v, "model list");
    out.emplace_back(part);
  }
  return out;
}

std::string fmt(double v) {
  std::array<char, 64> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename C>
std::string join(const C& items, std::string (*f)(typename C::value_type)) {
  std::string out;
  for (const auto& it : items) {
    if (!out.empty()) out += ',';
    out += f(it);
  }
  return out;
}

std::string fmt_d(double v) { return fmt(v); }
std::string fmt_s(std::string s) { return s; }

struct KeySpec {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
};

#define TS_INT(field) \
  KeySpec { [](const RunConfig& c) { return std::to_string(c.field); }, \
            [](RunConfig& c, std::string_view k, std::string_view v) { c.field = to_int(k, v); } }
#define TS_DBL(field) \
  KeySpec { [](const RunConfig& c) { return fmt(c.field); }, \
            [](RunConfig& c, std::string_view k, std::string_view v) { c.field = to_double(k, v); } }
#define TS_BOOL(field) \
  KeySpec { [](const RunConfig& c) { return fmt(c.field); }, \
            [](RunConfig& c, std::string_view k, std::string_view v) { c.field = to_bool(k, v); } }

const std::map<std::string, KeySpec, std::less<>>& registry() {
  static const std::map<std::string, KeySpec, std::less<>> keys = {
      {"segmentation.patch_size", TS_INT(pipeline.segmentation.patch_size)},
      {"segmentation.stride", TS_INT(pipeline.segmentation.stride)},
      {"segmentation.pad", TS_INT(pipeline.segmentation.pad)},
      {"segmentation.inference_mpp", TS_DBL(pipeline.segmentation.inference_mpp)},
      {"segmentation.tau_stroma", TS_DBL(pipeline.segmentation.tau_stroma)},
      {"segmentation.tau_tumor", TS_DBL(pipeline.segmentation.tau_tumor)},
      {"segmentation.opening_radius", TS_INT(pipeline.segmentation.opening_radius)},
      {"segmentation.ensemble_size", TS_INT(pipeline.segmentation.ensemble_size)},
      {"segmentation.tumor_precedence", TS_BOOL(pipeline.segmentation.tumor_precedence)},
      {"segmentation.models",
       {[](const RunConfig& c) { return join(c.segmentation_models, fmt_s); },
        [](RunConfig& c, std::string_view k, std::string_view v) { c.segmentation_models = to_models(k, v); }}},
      {"detection.tile_size", TS_INT(pipeline.detection.tile_size)},
      {"detection.tile_stride", TS_INT(pipeline.detection.tile_stride)},
      {"detection.subpatch_size", TS_INT(pipeline.detection.subpatch_size)},
      {"detection.subpatch_overlap", TS_INT(pipeline.detection.subpatch_overlap)},
      {"detection.det_threshold", TS_DBL(pipeline.detection.det_threshold)},
      {"detection.nms_tile", TS_INT(pipeline.detection.nms_tile)},
      {"detection.nms_radius_um", TS_DBL(pipeline.detection.nms_radius_um)},
      {"detection.ensemble_size", TS_INT(pipeline.detection.ensemble_size)},
      {"detection.connectivity",
       {[](const RunConfig& c) {
          return std::string(c.pipeline.detection.connectivity == Connectivity::four ? "4" : "8");
        },
        [](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "4") {
            c.pipeline.detection.connectivity = Connectivity::four;
          } else if (v == "8") {
            c.pipeline.detection.connectivity = Connectivity::eight;
          } else {
            bad_value(k, v, "connectivity (4 or 8)");
          }
        }}},
      {"detection.models",
       {[](const RunConfig& c) { return join(c.detection_models, fmt_s); },
        [](RunConfig& c, std::string_view k, std::string_view v) { c.detection_models = to_models(k, v); }}},
      {"bulk.opening_radius", TS_INT(pipeline.bulk.opening_radius)},
      {"bulk.min_blob_area_px",
       {[](const RunConfig& c) { return std::to_string(c.pipeline.bulk.min_blob_area_px); },
        [](RunConfig& c, std::string_view k, std::string_view v) { c.pipeline.bulk.min_blob_area_px = to_int64(k, v); }}},
      {"bulk.sample_step_px", TS_INT(pipeline.bulk.sample_step_px)},
      {"bulk.max_edge_um", TS_DBL(pipeline.bulk.max_edge_um)},
      {"scoring.area_gate_mm2", TS_DBL(pipeline.scoring.area_gate_mm2)},
      {"scoring.lymphocyte_area_um2", TS_DBL(pipeline.scoring.lymphocyte_area_um2)},
      {"scoring.rounding",
       {[](const RunConfig& c) {
          return std::string(c.pipeline.scoring.rounding == ScoreRounding::truncate ? "truncate" : "half_up");
        },
        [](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "truncate") {
            c.pipeline.scoring.rounding = ScoreRounding::truncate;
          } else if (v == "half_up") {
            c.pipeline.scoring.rounding = ScoreRounding::half_up;
          } else {
            bad_value(k, v, "rounding (truncate or half_up)");
          }
        }}},
      {"metrics.hit_radius_um", TS_DBL(metrics.hit_radius_um)},
      {"metrics.default_area_mm2", TS_DBL(metrics.default_area_mm2)},
      {"metrics.mpp", TS_DBL(metrics.mpp)},
      {"metrics.fp_rates",
       {[](const RunConfig& c) { return join(c.metrics.fp_rates, fmt_d); },
        [](RunConfig& c, std::string_view k, std::string_view v) { c.metrics.fp_rates = to_doubles(k, v); }}},
      {"predictor.normalize", TS_BOOL(predictor.normalization.enabled)},
      {"predictor.mean",
       {[](const RunConfig& c) { return join(c.predictor.normalization.mean, fmt_d); },
        [](RunConfig& c, std::string_view k, std::string_view v) {
          const auto vals = to_doubles(k, v);
          if (vals.size() != 3) bad_value(k, v, "three numbers");
          std::copy(vals.begin(), vals.end(), c.predictor.normalization.mean.begin());
        }}},
      {"predictor.std",
       {[](const RunConfig& c) { return join(c.predictor.normalization.std, fmt_d); },
        [](RunConfig& c, std::string_view k, std::string_view v) {
          const auto vals = to_doubles(k, v);
          if (vals.size() != 3) bad_value(k, v, "three numbers");
          std::copy(vals.begin(), vals.end(), c.predictor.normalization.std.begin());
        }}},
      {"predictor.dark_threshold", TS_DBL(predictor.dark_threshold)},
      {"predictor.blue_margin", TS_DBL(predictor.blue_margin)},
  };
  return keys;
}

#undef TS_INT
#undef TS_DBL
#undef TS_BOOL

struct ModelEntry {
  PredictorKind kind;
  std::string arg;
};

ModelEntry parse_model(std::string_view entry) {
  const auto colon = entry.find(':');
  const std::string_view kind = trim(entry.substr(0, colon));
  const std::string arg = colon == std::string_view::npos ? std::string{} : std::string(trim(entry.substr(colon + 1)));
  for (const auto k : {PredictorKind::constant, PredictorKind::identity, PredictorKind::file_backed,
                       PredictorKind::intensity_heuristic}) {
    if (kind == kind_name(k)) {
      if (k == PredictorKind::constant && arg.empty()) {
        throw ConfigError("model 'constant' needs values, e.g. constant:0.2/0.7");
      }
      if ((k == PredictorKind::identity || k == PredictorKind::intensity_heuristic) && !arg.empty()) {
        throw ConfigError("model '" + std::string(kind) + "' takes no argument");
      }
      return {k, arg};
    }
  }
  throw ConfigError("unknown model kind '" + std::string(kind) + "'");
}

void validate_models(const std::vector<std::string>& models, int ensemble_size, Task task, std::string_view section) {
  if (models.empty()) throw ConfigError(std::string(section) + ".models must not be empty");
  if (models.size() != 1 && models.size() != static_cast<std::size_t>(ensemble_size)) {
    throw ConfigError(std::string(section) + ".models must list one model or ensemble_size models");
  }
  for (const auto& m : models) {
    const auto entry = parse_model(m);
    if (entry.kind == PredictorKind::intensity_heuristic && task != Task::detection) {
      throw ConfigError("intensity_heuristic is a detection-only model");
    }
  }
}

void validate(const RunConfig& cfg) {
  validate(cfg.pipeline);
  validate_models(cfg.segmentation_models, cfg.pipeline.segmentation.ensemble_size, Task::segmentation, "segmentation");
  validate_models(cfg.detection_models, cfg.pipeline.detection.ensemble_size, Task::detection, "detection");
  if (!(cfg.metrics.hit_radius_um > 0.0)) throw ConfigError("metrics.hit_radius_um must be > 0");
  if (!(cfg.metrics.default_area_mm2 > 0.0)) throw ConfigError("metrics.default_area_mm2 must be > 0");
  if (!(cfg.metrics.mpp > 0.0)) throw ConfigError("metrics.mpp must be > 0");
  if (cfg.metrics.fp_rates.empty()) throw ConfigError("metrics.fp_rates must not be empty");
  for (const double r : cfg.metrics.fp_rates) {
    if (!(r > 0.0)) throw ConfigError("metrics.fp_rates entries must be > 0");
  }
  for (const double s : cfg.predictor.normalization.std) {
    if (!(s > 0.0)) throw ConfigError("predictor.std entries must be > 0");
  }
  if (cfg.predictor.dark_threshold < 0.0 || cfg.predictor.dark_threshold > 255.0) {
    throw ConfigError("predictor.dark_threshold must lie in [0, 255]");
  }
  if (cfg.predictor.blue_margin < 0.0) throw ConfigError("predictor.blue_margin must be >= 0");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, spec] : registry()) out.push_back(k);
    return out;
  }();
  return keys;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  for (const auto raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = registry().find(key);
    if (it == registry().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    if (!seen.emplace(key).second) throw ConfigError("duplicate config key '" + std::string(key) + "'");
    it->second.set(cfg, key, value);
  }
  for (const auto& k : config_keys()) {
    if (!seen.contains(k)) cfg.defaults_applied.push_back(k);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (path.empty()) return parse_config("");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, spec] : registry()) out += k + " = " + spec.get(cfg) + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<PredictorPtr> build_predictors(const RunConfig& cfg, Task task, const std::filesystem::path& slide_path) {
  const auto& models = task == Task::segmentation ? cfg.segmentation_models : cfg.detection_models;
  const int ensemble =
      task == Task::segmentation ? cfg.pipeline.segmentation.ensemble_size : cfg.pipeline.detection.ensemble_size;
  std::vector<PredictorPtr> built;
  for (const auto& m : models) {
    const ModelEntry entry = parse_model(m);
    PredictorSpec spec;
    spec.kind = entry.kind;
    spec.preprocessing = cfg.predictor.normalization;
    spec.dark_threshold = cfg.predictor.dark_threshold;
    spec.blue_margin = cfg.predictor.blue_margin;
    if (entry.kind == PredictorKind::constant) {
      spec.constant_values.clear();
      for (const auto v : split(entry.arg, '/')) spec.constant_values.push_back(to_double("constant model", v));
    } else if (entry.kind == PredictorKind::file_backed) {
      if (entry.arg.empty()) {
        spec.source_prefix = slide_path;
        spec.source_prefix.replace_extension();
      } else {
        const std::filesystem::path p(entry.arg);
        spec.source_prefix = p.is_relative() ? cfg.base_dir / p : p;
      }
    }
    built.push_back(make_builtin_predictor(spec, task));
  }
  // Identical members are shared rather than loaded again.
  while (built.size() < static_cast<std::size_t>(ensemble)) built.push_back(built.front());
  return built;
}

}  // namespace tilscore::cli
