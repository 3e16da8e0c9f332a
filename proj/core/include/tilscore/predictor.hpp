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

/// @file predictor.hpp
/// @brief Patch-predictor seam standing in for trained segmentation and
/// detection networks, plus ensemble averaging and deterministic built-in
/// predictors.

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilscore/raster.hpp"

namespace tilscore {

enum class TissueClass { tumor, stroma, lymphocyte };

std::string_view class_name(TissueClass c) noexcept;

enum class Task { segmentation, detection };

/// {tumor, stroma} for segmentation, {lymphocyte} for detection. The
/// residual "other" class is never materialized.
std::vector<TissueClass> task_classes(Task task);

/// One unit-interval map per class, same extent as the input patch.
struct PredictionMaps {
  std::vector<TissueClass> classes;
  std::vector<ProbMap> maps;

  const ProbMap& at(TissueClass c) const;
  ProbMap& at(TissueClass c);
};

/// Where a patch sits on the slide, in pixels at the patch's resolution.
/// The origin may be negative and the window may extend past the slide
/// extent; those samples are zero padding.
struct PatchWindow {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
  int extent_width = 0;
  int extent_height = 0;
  Resolution resolution{};
};

/// Model backend interface. Implementations must be deterministic; those
/// returning concurrent() == true must tolerate simultaneous predict() calls.
class PatchPredictor {
 public:
  virtual ~PatchPredictor() = default;

  virtual Task task() const noexcept = 0;
  virtual PredictionMaps predict(const ImageU8& patch, const PatchWindow& window) const = 0;
  virtual bool concurrent() const noexcept { return true; }
  virtual std::string describe() const = 0;

  /// Called once per slide before inference with the base-magnification
  /// extent; throws when the backend cannot serve that slide.
  virtual void check_slide(int /*width*/, int /*height*/, const Resolution& /*res*/) const {}
};

using PredictorPtr = std::shared_ptr<const PatchPredictor>;

/// Per-channel input normalization for network backends:
/// (value / 255 - mean) / std. Built-in predictors consume raw patches.
struct Normalization {
  bool enabled = false;
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> std{0.229, 0.224, 0.225};
};

/// Interleaved (HWC) normalized samples of an RGB patch.
std::vector<double> normalize_patch(const ImageU8& patch, const Normalization& norm);

enum class PredictorKind { constant, identity, file_backed, intensity_heuristic };

std::string_view kind_name(PredictorKind k) noexcept;

struct PredictorSpec {
  PredictorKind kind = PredictorKind::constant;
  /// constant: one value per task class, or a single value for all.
  std::vector<double> constant_values{0.0};
  /// file_backed: sources are `<source_prefix>.<class>.png` (+ `.res`).
  std::filesystem::path source_prefix;
  /// intensity_heuristic: luminance below `dark_threshold` (0..255) and the
  /// blue channel exceeding red and green by more than `blue_margin`.
  double dark_threshold = 100.0;
  double blue_margin = 10.0;
  Normalization preprocessing{};
};

/// Validates `spec` against `task` and builds the predictor. file_backed
/// sources are loaded eagerly. Throws ConfigError / IoError.
PredictorPtr make_builtin_predictor(const PredictorSpec& spec, Task task);

/// file_backed predictor over in-memory 8-bit sources (value / 255 is the
/// probability). Sources must carry their resolution.
PredictorPtr make_file_backed_predictor(std::map<TissueClass, ImageU8> sources, Task task);

/// Runs `predictor` and checks the output contract (class set, extent,
/// unit interval). Throws ShapeError on a non-RGB patch.
PredictionMaps predict_patch(const PatchPredictor& predictor, const ImageU8& patch, const PatchWindow& window);

/// Per-pixel arithmetic mean across members, clamped to the member range.
/// Throws ConfigError on empty input or mismatched class sets and
/// ShapeError on mismatched extents.
PredictionMaps ensemble_average(std::span<const PredictionMaps> members);

}  // namespace tilscore
