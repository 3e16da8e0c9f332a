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

/// @file tils_scoring.hpp
/// @brief Case routing, bulk-stroma construction, the TILs score and the
/// end-to-end case pipeline.
///
/// score = clamp(trunc(100 * til_count * lymphocyte_area_um2 / stroma_area_um2), 0, 100)
///
/// Cases whose tissue area is below `area_gate_mm2` are ROIs (branch L1)
/// and produce a segmentation plus detections over the whole tissue. Larger
/// cases (L2) are scored over the stroma inside the tumor bulk.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tilscore/detection.hpp"
#include "tilscore/predictor.hpp"
#include "tilscore/raster.hpp"
#include "tilscore/segmentation.hpp"
#include "tilscore/tumor_bulk.hpp"

namespace tilscore {

enum class Branch { L1, L2 };

std::string_view branch_name(Branch b) noexcept;

enum class ScoreRounding { truncate, half_up };

struct ScoringConfig {
  double area_gate_mm2 = 5.0;
  /// Area credited to each detected lymphocyte.
  double lymphocyte_area_um2 = 16.0;
  ScoreRounding rounding = ScoreRounding::truncate;
};

void validate(const ScoringConfig& cfg);

struct RouteDecision {
  Branch branch = Branch::L1;
  double tissue_area_mm2 = 0.0;
  bool empty_tissue = false;
};

/// L1 iff tissue area < area_gate_mm2 (strict).
RouteDecision route_case(const BinaryMask& tissue, const Resolution& res, const ScoringConfig& cfg);

/// Pixels labelled stroma inside the bulk mask.
BinaryMask stroma_in_bulk(const LabelMask& segmentation, const BinaryMask& bulk);

struct TilsScore {
  int score = 0;
  double til_area_um2 = 0.0;
  double stroma_area_um2 = 0.0;
  /// Stroma area was zero; the score is 0.
  bool degenerate = false;
};

TilsScore tils_score(std::size_t til_count, double stroma_area_um2, const ScoringConfig& cfg);
TilsScore tils_score(std::size_t til_count, const BinaryMask& stroma_mask, const Resolution& res,
                     const ScoringConfig& cfg);

struct TilsReport {
  Branch branch = Branch::L2;
  double tissue_area_mm2 = 0.0;
  double bulk_area_mm2 = 0.0;
  double stroma_in_bulk_area_um2 = 0.0;
  std::size_t til_count = 0;
  double til_area_um2 = 0.0;
  int tils_score = 0;
  std::vector<std::string> flags;
};

/// `{"tils_score": <int>, "branch": "L1"|"L2", "tissue_area_mm2": <float>,
///   "stroma_in_bulk_area_um2": <float>, "til_count": <int>}`, floats with
/// four decimals, newline-terminated.
std::string tils_report_json(const TilsReport& report);

struct PipelineConfig {
  SegmentationConfig segmentation;
  DetectionConfig detection;
  BulkParams bulk;
  ScoringConfig scoring;
};

void validate(const PipelineConfig& cfg);

struct CasePredictors {
  std::vector<PredictorPtr> segmentation;
  std::vector<PredictorPtr> detection;
};

struct CaseOutputs {
  RouteDecision route;
  /// Base-magnification labels (both branches).
  LabelMask segmentation;
  /// After NMS. L1: over the whole tissue; L2: inside bulk stroma.
  std::vector<Detection> detections;
  /// L2 only.
  std::optional<TilsReport> report;
  std::optional<BulkRegion> bulk;
  std::vector<std::string> warnings;
};

/// Segments the slide, routes the case and runs the branch pipeline.
CaseOutputs run_case(const ImageU8& slide, const BinaryMask& tissue, const CasePredictors& predictors,
                     const PipelineConfig& cfg);

/// Segmentation-only and detection-only stages used by the CLI.
LabelMask run_segmentation(const ImageU8& slide, const BinaryMask& tissue, std::span<const PredictorPtr> predictors,
                           const SegmentationConfig& cfg, std::vector<std::string>* warnings = nullptr);
std::vector<Detection> run_detection(const ImageU8& slide, const BinaryMask& region,
                                     std::span<const PredictorPtr> predictors, const DetectionConfig& cfg);

}  // namespace tilscore
