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

/// @file segmentation.hpp
/// @brief Whole-slide tumor/stroma segmentation.
///
/// The slide is mean-pooled from base magnification down to the inference
/// resolution, tiled with a zero-padded patch grid, run through every
/// ensemble member, averaged and stitched from central crops.
/// finalize_segmentation thresholds the maps, opens the tumor region,
/// upsamples labels to base magnification and clips them to tissue.

#pragma once

#include <cstddef>
#include <span>

#include "tilscore/predictor.hpp"
#include "tilscore/raster.hpp"

namespace tilscore {

struct SegmentationConfig {
  int patch_size = 512;
  int stride = 256;
  int pad = 128;
  double inference_mpp = 1.0;
  double tau_stroma = 0.35;
  double tau_tumor = 0.20;
  int opening_radius = 10;
  int ensemble_size = 3;
  /// Where both thresholds fire, tumor wins (false: stroma wins).
  bool tumor_precedence = true;
};

/// Throws ConfigError unless pad == (patch_size - stride) / 2, thresholds
/// lie in (0, 1) and the remaining fields are positive.
void validate(const SegmentationConfig& cfg);

struct SegmentationMaps {
  ProbMap tumor;   ///< at the inference resolution
  ProbMap stroma;  ///< at the inference resolution
  int downsample_factor = 1;
  std::size_t windows_total = 0;
  std::size_t windows_skipped = 0;
  bool empty_tissue = false;
  bool dropped_odd_edge = false;
};

/// Windows whose central crop covers no tissue are skipped and left at
/// probability 0. Throws ShapeError when the slide is not RGB or the tissue
/// mask extent differs, ConfigError for non-segmentation predictors or a
/// resolution ratio that is not a power of two.
SegmentationMaps segment_slide(const ImageU8& slide, const BinaryMask& tissue, std::span<const PredictorPtr> predictors,
                               const SegmentationConfig& cfg);

/// Label mask at the tissue mask's extent and resolution with values in
/// {0, 1, 2}. Tumor pixels removed by the opening become label 0.
LabelMask finalize_segmentation(const ProbMap& tumor_prob, const ProbMap& stroma_prob, const BinaryMask& tissue,
                                const SegmentationConfig& cfg);

/// Pre-opening threshold step, exposed for property tests: 1 = tumor,
/// 2 = stroma, 0 = neither.
LabelMask threshold_segmentation(const ProbMap& tumor_prob, const ProbMap& stroma_prob, const SegmentationConfig& cfg);

}  // namespace tilscore
