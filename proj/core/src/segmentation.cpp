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

#include "tilscore/segmentation.hpp"

#include <cmath>
#include <vector>

#include "tilscore/morphology.hpp"
#include "tilscore/parallel.hpp"
#include "tilscore/patch_grid.hpp"

namespace tilscore {

void validate(const SegmentationConfig& cfg) {
  if (cfg.stride <= 0 || cfg.patch_size < cfg.stride) throw ConfigError("segmentation: need patch_size >= stride > 0");
  if (2 * cfg.pad != cfg.patch_size - cfg.stride) {
    throw ConfigError("segmentation.pad must equal (patch_size - stride) / 2");
  }
  if (!(cfg.tau_stroma > 0.0 && cfg.tau_stroma < 1.0)) throw ConfigError("segmentation.tau_stroma must lie in (0, 1)");
  if (!(cfg.tau_tumor > 0.0 && cfg.tau_tumor < 1.0)) throw ConfigError("segmentation.tau_tumor must lie in (0, 1)");
  if (!(cfg.inference_mpp > 0.0)) throw ConfigError("segmentation.inference_mpp must be > 0");
  if (cfg.opening_radius < 0) throw ConfigError("segmentation.opening_radius must be >= 0");
  if (cfg.ensemble_size < 1) throw ConfigError("segmentation.ensemble_size must be >= 1");
}

namespace {

int power_of_two_factor(double ratio) {
  const double rounded = std::round(ratio);
  const auto f = static_cast<int>(rounded);
  if (f < 1 || std::abs(ratio - rounded) > 1e-9 || (f & (f - 1)) != 0) {
    throw ConfigError("inference resolution must be the slide resolution times a power of two");
  }
  return f;
}

}  // namespace

SegmentationMaps segment_slide(const ImageU8& slide, const BinaryMask& tissue, std::span<const PredictorPtr> predictors,
                               const SegmentationConfig& cfg) {
  validate(cfg);
  if (slide.channels() != 3) throw ShapeError("segment_slide: slide must be RGB");
  if (slide.empty()) throw EmptyRasterError("segment_slide: empty slide");
  require_same_extent(slide, tissue, "segment_slide tissue mask");
  if (tissue.channels() != 1) throw ShapeError("segment_slide: tissue mask must have one channel");
  if (predictors.empty()) throw ConfigError("segment_slide: no predictors");
  bool concurrent = true;
  for (const auto& p : predictors) {
    if (!p || p->task() != Task::segmentation) throw ConfigError("segment_slide: predictor is not a segmentation model");
    p->check_slide(slide.width(), slide.height(), slide.resolution());
    concurrent = concurrent && p->concurrent();
  }

  SegmentationMaps result;
  result.downsample_factor = power_of_two_factor(cfg.inference_mpp / slide.resolution().mpp_x);
  ImageU8 scaled = slide;
  for (int f = result.downsample_factor; f > 1; f /= 2) {
    auto half = resample_half(scaled);
    result.dropped_odd_edge = result.dropped_odd_edge || half.dropped_odd_edge;
    scaled = std::move(half.raster);
  }
  if (scaled.empty()) throw EmptyRasterError("segment_slide: slide smaller than the downsampling factor");

  const Resolution inference_res = scaled.resolution();
  result.tumor = ProbMap(scaled.width(), scaled.height(), 1, inference_res);
  result.stroma = ProbMap(scaled.width(), scaled.height(), 1, inference_res);

  const IntegralMask tissue_sum(tissue);
  if (tissue_sum.count(0, 0, tissue.width(), tissue.height()) == 0) {
    result.empty_tissue = true;
    return result;
  }

  const PatchGrid grid = plan_patch_grid(scaled.width(), scaled.height(), cfg.patch_size, cfg.stride, cfg.pad, inference_res);
  result.windows_total = grid.windows.size();
  const int f = result.downsample_factor;
  std::vector<char> skipped(grid.windows.size(), 0);

  const auto run_window = [&](std::size_t i) {
    const PatchOrigin origin = grid.windows[i];
    const PixelRect crop = central_crop_rect(grid, origin);
    if (crop.empty() || tissue_sum.count(crop.x0 * f, crop.y0 * f, crop.x1 * f, crop.y1 * f) == 0) {
      skipped[i] = 1;
      return;
    }
    const ImageU8 patch = extract_patch(scaled, grid, origin);
    const PixelRect rect = window_rect(grid, origin);
    const PatchWindow window{rect.x0, rect.y0, grid.patch_size, grid.patch_size, scaled.width(), scaled.height(),
                             inference_res};
    std::vector<PredictionMaps> members;
    members.reserve(predictors.size());
    for (const auto& p : predictors) members.push_back(predict_patch(*p, patch, window));
    const PredictionMaps mean = ensemble_average(members);
    write_central_crop(result.tumor, grid, origin, mean.at(TissueClass::tumor));
    write_central_crop(result.stroma, grid, origin, mean.at(TissueClass::stroma));
  };

  if (concurrent) {
    parallel_for(grid.windows.size(), run_window);
  } else {
    for (std::size_t i = 0; i < grid.windows.size(); ++i) run_window(i);
  }
  for (const char s : skipped) result.windows_skipped += s != 0 ? 1 : 0;
  return result;
}

LabelMask threshold_segmentation(const ProbMap& tumor_prob, const ProbMap& stroma_prob, const SegmentationConfig& cfg) {
  require_same_extent(tumor_prob, stroma_prob, "threshold_segmentation");
  LabelMask labels(tumor_prob.width(), tumor_prob.height(), 1, tumor_prob.resolution());
  for (std::size_t i = 0; i < labels.data().size(); ++i) {
    const bool tumor = tumor_prob.data()[i] >= cfg.tau_tumor;
    const bool stroma = stroma_prob.data()[i] >= cfg.tau_stroma;
    std::uint8_t v = kLabelOther;
    if (tumor && stroma) {
      v = cfg.tumor_precedence ? kLabelTumor : kLabelStroma;
    } else if (tumor) {
      v = kLabelTumor;
    } else if (stroma) {
      v = kLabelStroma;
    }
    labels.data()[i] = v;
  }
  return labels;
}

LabelMask finalize_segmentation(const ProbMap& tumor_prob, const ProbMap& stroma_prob, const BinaryMask& tissue,
                                const SegmentationConfig& cfg) {
  validate(cfg);
  require_same_extent(tumor_prob, stroma_prob, "finalize_segmentation");
  if (tumor_prob.empty()) throw EmptyRasterError("finalize_segmentation: empty probability maps");
  if (tissue.channels() != 1) throw ShapeError("finalize_segmentation: tissue mask must have one channel");
  const int f = power_of_two_factor(tumor_prob.resolution().mpp_x / tissue.resolution().mpp_x);
  if ((tissue.width() + f - 1) / f < tumor_prob.width() || tissue.width() / f > tumor_prob.width() ||
      (tissue.height() + f - 1) / f < tumor_prob.height() || tissue.height() / f > tumor_prob.height()) {
    throw ShapeError("finalize_segmentation: probability maps do not match the tissue mask extent");
  }

  LabelMask labels = threshold_segmentation(tumor_prob, stroma_prob, cfg);
  BinaryMask tumor(labels.width(), labels.height(), 1, labels.resolution());
  for (std::size_t i = 0; i < labels.data().size(); ++i) tumor.data()[i] = labels.data()[i] == kLabelTumor ? 1 : 0;
  const BinaryMask opened = open(tumor, disc_element(cfg.opening_radius));
  for (std::size_t i = 0; i < labels.data().size(); ++i) {
    if (tumor.data()[i] != 0 && opened.data()[i] == 0) labels.data()[i] = kLabelOther;
  }

  LabelMask base = upsample_nearest(labels, f, tissue.width(), tissue.height(), tissue.resolution());
  for (std::size_t i = 0; i < base.data().size(); ++i) {
    if (tissue.data()[i] == 0) base.data()[i] = kLabelOther;
  }
  return base;
}

}  // namespace tilscore
