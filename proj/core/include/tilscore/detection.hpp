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

/// @file detection.hpp
/// @brief Whole-slide lymphocyte detection and slide-level non-maximum
/// suppression.

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "tilscore/morphology.hpp"
#include "tilscore/predictor.hpp"
#include "tilscore/raster.hpp"

namespace tilscore {

struct DetectionConfig {
  int tile_size = 1024;
  int tile_stride = 1024;
  int subpatch_size = 128;
  int subpatch_overlap = 28;  ///< sub-patch stride = size - overlap
  double det_threshold = 0.3;
  int nms_tile = 2048;
  double nms_radius_um = 4.0;
  Connectivity connectivity = Connectivity::eight;
  int ensemble_size = 3;

  int subpatch_stride() const noexcept { return subpatch_size - subpatch_overlap; }
};

void validate(const DetectionConfig& cfg);

/// Point detection in base-magnification pixel coordinates.
struct Detection {
  double x = 0.0;
  double y = 0.0;
  double probability = 0.0;
  bool operator==(const Detection&) const = default;
};

/// Components of {p >= threshold}; each yields its centroid shifted by the
/// offset and the mean probability over the component.
std::vector<Detection> prob_map_to_detections(const ProbMap& prob_map, double threshold, double offset_x = 0.0,
                                              double offset_y = 0.0, Connectivity connectivity = Connectivity::eight);

struct DetectionRun {
  std::vector<Detection> detections;  ///< tile order, before NMS
  std::size_t tiles_total = 0;
  std::size_t tiles_run = 0;
};

/// Tiles intersecting `region_mask` are split into overlapping sub-patches;
/// each sub-patch is run through every ensemble member and averaged, and
/// overlapping sub-patch outputs are averaged within the tile. The tile map
/// is thresholded and converted to detections; detections whose centroid
/// pixel is outside `region_mask` are dropped.
DetectionRun detect_slide(const ImageU8& slide, const BinaryMask& region_mask, std::span<const PredictorPtr> predictors,
                          const DetectionConfig& cfg);

/// Greedy radius suppression: visit detections by descending probability
/// (ties: lower y, then lower x) and keep one iff no kept detection lies
/// within nms_radius_um. Evaluated in parallel rounds over nms_tile
/// buckets whose neighbourhood queries reach into adjacent buckets; the
/// result is identical to the sequential greedy pass. Output is in
/// acceptance order.
std::vector<Detection> nms(std::span<const Detection> detections, const DetectionConfig& cfg, const Resolution& res);

/// Sorts by (y, x, probability).
void sort_by_position(std::vector<Detection>& detections);

/// `x_px,y_px,probability` CSV; probability with 6 decimals, rows sorted by
/// (y, x).
void write_detections_csv(const std::filesystem::path& path, std::vector<Detection> detections);
std::vector<Detection> read_detections_csv(const std::filesystem::path& path);

struct PointXY {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const PointXY&) const = default;
};

/// `x_px,y_px` CSV (extra columns are ignored).
std::vector<PointXY> read_points_csv(const std::filesystem::path& path);
void write_points_csv(const std::filesystem::path& path, std::span<const PointXY> points);

}  // namespace tilscore
