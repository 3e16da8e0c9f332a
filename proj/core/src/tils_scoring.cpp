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

#include "tilscore/tils_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tilscore {

std::string_view branch_name(Branch b) noexcept { return b == Branch::L1 ? "L1" : "L2"; }

void validate(const ScoringConfig& cfg) {
  if (!(cfg.area_gate_mm2 > 0.0)) throw ConfigError("scoring.area_gate_mm2 must be > 0");
  if (!(cfg.lymphocyte_area_um2 > 0.0)) throw ConfigError("scoring.lymphocyte_area_um2 must be > 0");
}

void validate(const PipelineConfig& cfg) {
  validate(cfg.segmentation);
  validate(cfg.detection);
  validate(cfg.bulk);
  validate(cfg.scoring);
}

RouteDecision route_case(const BinaryMask& tissue, const Resolution& res, const ScoringConfig& cfg) {
  validate(cfg);
  validate(res);
  RouteDecision d;
  const std::size_t fg = count_foreground(tissue);
  d.tissue_area_mm2 = tissue_area_mm2(fg, res);
  d.empty_tissue = fg == 0;
  d.branch = d.tissue_area_mm2 < cfg.area_gate_mm2 ? Branch::L1 : Branch::L2;
  return d;
}

BinaryMask stroma_in_bulk(const LabelMask& segmentation, const BinaryMask& bulk) {
  require_same_extent(segmentation, bulk, "stroma_in_bulk");
  if (segmentation.channels() != 1 || bulk.channels() != 1) throw ShapeError("stroma_in_bulk: masks must have one channel");
  BinaryMask out(segmentation.width(), segmentation.height(), 1, segmentation.resolution());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = (segmentation.data()[i] == kLabelStroma && bulk.data()[i] != 0) ? 1 : 0;
  }
  return out;
}

TilsScore tils_score(std::size_t til_count, double stroma_area_um2, const ScoringConfig& cfg) {
  validate(cfg);
  TilsScore s;
  s.til_area_um2 = static_cast<double>(til_count) * cfg.lymphocyte_area_um2;
  s.stroma_area_um2 = stroma_area_um2;
  if (!(stroma_area_um2 > 0.0)) {
    s.degenerate = true;
    return s;
  }
  const double raw = 100.0 * s.til_area_um2 / stroma_area_um2;
  // Relative slack keeps exact ratios such as 10 from truncating to 9.
  const double slack = 1e-9 * std::max(1.0, raw);
  const double integral = cfg.rounding == ScoreRounding::truncate ? std::floor(raw + slack) : std::floor(raw + 0.5 + slack);
  s.score = static_cast<int>(std::clamp(integral, 0.0, 100.0));
  return s;
}

TilsScore tils_score(std::size_t til_count, const BinaryMask& stroma_mask, const Resolution& res,
                     const ScoringConfig& cfg) {
  validate(res);
  return tils_score(til_count, static_cast<double>(count_foreground(stroma_mask)) * res.pixel_area_um2(), cfg);
}

std::string tils_report_json(const TilsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\"tils_score\": %d, \"branch\": \"%s\", \"tissue_area_mm2\": %.4f, \"stroma_in_bulk_area_um2\": %.4f, "
                "\"til_count\": %zu}\n",
                r.tils_score, std::string(branch_name(r.branch)).c_str(), r.tissue_area_mm2, r.stroma_in_bulk_area_um2,
                r.til_count);
  return buf;
}

LabelMask run_segmentation(const ImageU8& slide, const BinaryMask& tissue, std::span<const PredictorPtr> predictors,
                           const SegmentationConfig& cfg, std::vector<std::string>* warnings) {
  const SegmentationMaps maps = segment_slide(slide, tissue, predictors, cfg);
  if (warnings != nullptr) {
    if (maps.empty_tissue) warnings->emplace_back("empty_tissue");
    if (maps.dropped_odd_edge) warnings->emplace_back("odd_edge_dropped_in_downsampling");
  }
  return finalize_segmentation(maps.tumor, maps.stroma, tissue, cfg);
}

std::vector<Detection> run_detection(const ImageU8& slide, const BinaryMask& region,
                                     std::span<const PredictorPtr> predictors, const DetectionConfig& cfg) {
  const DetectionRun run = detect_slide(slide, region, predictors, cfg);
  return nms(run.detections, cfg, slide.resolution());
}

CaseOutputs run_case(const ImageU8& slide, const BinaryMask& tissue, const CasePredictors& predictors,
                     const PipelineConfig& cfg) {
  validate(cfg);
  CaseOutputs out;
  out.route = route_case(tissue, slide.resolution(), cfg.scoring);
  if (out.route.empty_tissue) out.warnings.emplace_back("empty_tissue");

  out.segmentation = run_segmentation(slide, tissue, predictors.segmentation, cfg.segmentation, &out.warnings);

  if (out.route.branch == Branch::L1) {
    out.detections = run_detection(slide, tissue, predictors.detection, cfg.detection);
    return out;
  }

  BinaryMask tumor(out.segmentation.width(), out.segmentation.height(), 1, out.segmentation.resolution());
  for (std::size_t i = 0; i < tumor.data().size(); ++i) {
    tumor.data()[i] = out.segmentation.data()[i] == kLabelTumor ? 1 : 0;
  }
  BulkRegion bulk = tumor_bulk_region(tumor, slide.resolution(), cfg.bulk);
  const BinaryMask region = stroma_in_bulk(out.segmentation, bulk.mask);
  out.detections = run_detection(slide, region, predictors.detection, cfg.detection);

  const Resolution& res = slide.resolution();
  TilsReport report;
  report.branch = Branch::L2;
  report.tissue_area_mm2 = out.route.tissue_area_mm2;
  report.bulk_area_mm2 = tissue_area_mm2(bulk.mask, res);
  report.til_count = out.detections.size();
  const TilsScore score = tils_score(report.til_count, region, res, cfg.scoring);
  report.stroma_in_bulk_area_um2 = score.stroma_area_um2;
  report.til_area_um2 = score.til_area_um2;
  report.tils_score = score.score;
  if (bulk.fallback) report.flags.emplace_back("fallback_bulk");
  if (score.degenerate) report.flags.emplace_back("degenerate_stroma_area");
  for (const auto& f : report.flags) out.warnings.push_back(f);
  out.report = std::move(report);
  out.bulk = std::move(bulk);
  return out;
}

}  // namespace tilscore
