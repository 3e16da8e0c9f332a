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

/// @file config.hpp
/// @brief Flat `section.key = value` run configuration.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tilscore/predictor.hpp"
#include "tilscore/tils_scoring.hpp"

namespace tilscore::cli {

struct MetricsConfig {
  double hit_radius_um = 4.0;
  std::vector<double> fp_rates{10.0, 20.0, 50.0, 100.0, 200.0, 300.0};
  /// Area per case for detection FROC when no tissue mask is supplied.
  double default_area_mm2 = 1.0;
  /// Pixel size assumed for detection CSVs without a tissue mask.
  double mpp = 0.5;
};

struct PredictorDefaults {
  Normalization normalization{};
  double dark_threshold = 100.0;
  double blue_margin = 10.0;
};

struct RunConfig {
  PipelineConfig pipeline;
  /// `kind[:arg]` entries; a single entry is replicated ensemble_size times.
  std::vector<std::string> segmentation_models{"file_backed"};
  std::vector<std::string> detection_models{"file_backed"};
  PredictorDefaults predictor;
  MetricsConfig metrics;

  /// Keys absent from the parsed text, in sorted order.
  std::vector<std::string> defaults_applied;
  /// Directory that relative model paths resolve against.
  std::filesystem::path base_dir;
};

/// Every recognised key, sorted.
const std::vector<std::string>& config_keys();

/// Throws ConfigError on unknown or duplicate keys, malformed lines and
/// out-of-range values.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

/// Empty path: all defaults.
RunConfig load_config(const std::filesystem::path& path);

/// All keys in sorted order, one `key = value` per line.
std::string serialize_config(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

/// Predictor ensemble for one task. `slide_path` supplies the default
/// file_backed prefix (the slide path without its extension).
std::vector<PredictorPtr> build_predictors(const RunConfig& cfg, Task task, const std::filesystem::path& slide_path);

}  // namespace tilscore::cli
