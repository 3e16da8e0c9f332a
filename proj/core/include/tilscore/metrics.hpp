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

/// @file metrics.hpp
/// @brief Segmentation and detection evaluation: Dice, tumor/stroma Dice,
/// one-to-one detection matching, F1, FROC, and Pearson correlation.

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tilscore/detection.hpp"
#include "tilscore/raster.hpp"

namespace tilscore {

/// 2|a & b| / (|a| + |b|); 1.0 when both are empty.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Mean of the tumor-vs-rest and stroma-vs-rest Dice scores. Pixels where
/// either mask is 255 (ignore) are excluded from both classes.
double tumor_stroma_dice(const LabelMask& pred, const LabelMask& gt);

struct MatchResult {
  /// (prediction index, ground-truth index)
  std::vector<std::pair<std::size_t, std::size_t>> true_positives;
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> false_negatives;
  double hit_radius_um = 4.0;

  std::size_t tp() const noexcept { return true_positives.size(); }
  std::size_t fp() const noexcept { return false_positives.size(); }
  std::size_t fn() const noexcept { return false_negatives.size(); }
};

/// Predictions in descending probability (ties: lower y, lower x, lower
/// index) each claim the nearest unclaimed ground-truth point within the hit
/// radius (ties: lower ground-truth index).
MatchResult match_detections(std::span<const Detection> pred, std::span<const PointXY> gt, double hit_radius_um,
                             const Resolution& res);

/// 2TP / (2TP + FP + FN); 1.0 when all three are zero.
double detection_f1(const MatchResult& match);

struct FrocCase {
  std::vector<Detection> predictions;
  std::vector<PointXY> ground_truth;
  double area_mm2 = 0.0;
  Resolution resolution{};
};

struct FrocPoint {
  double threshold = 0.0;
  double sensitivity = 0.0;
  double fp_per_mm2 = 0.0;
};

struct FrocResult {
  double score = 0.0;
  /// Sensitivity read off the curve at each requested FP density.
  std::vector<double> sensitivities;
  /// Operating points for decreasing thresholds, starting at (0, 0).
  std::vector<FrocPoint> curve;
};

inline const std::vector<double> kDefaultFpRates{10.0, 20.0, 50.0, 100.0, 200.0, 300.0};

/// Sweeps every distinct prediction probability as a threshold (keep
/// p >= t). At each FP density the sensitivity of the last operating point
/// not exceeding it is used; the score is their mean. Throws
/// UndefinedMetricError when there is no ground truth or the total area is
/// not positive, ConfigError for an empty rate list.
FrocResult froc(std::span<const FrocCase> cases, std::span<const double> fp_rates_per_mm2, double hit_radius_um);

double froc_score(std::span<const FrocCase> cases, std::span<const double> fp_rates_per_mm2, double hit_radius_um);

/// Sample Pearson correlation. Throws UndefinedMetricError on fewer than two
/// samples or zero variance, ShapeError on length mismatch.
double pearson_r(std::span<const double> x, std::span<const double> y);

}  // namespace tilscore
