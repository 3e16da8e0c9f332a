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

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "tilscore/error.hpp"
#include "tilscore/segmentation.hpp"

namespace tilscore {
namespace {

const Resolution kBase{0.5, 0.5};

SegmentationConfig small_config() {
  SegmentationConfig cfg;
  cfg.patch_size = 64;
  cfg.stride = 32;
  cfg.pad = 16;
  cfg.inference_mpp = 0.5;
  cfg.ensemble_size = 1;
  return cfg;
}

PredictorPtr make(PredictorKind kind, std::vector<double> values = {0.0}) {
  PredictorSpec s;
  s.kind = kind;
  s.constant_values = std::move(values);
  return make_builtin_predictor(s, Task::segmentation);
}

TEST(Segmentation, ConstantTumorEverywhere) {
  const ImageU8 slide(512, 512, 3, kBase, 128);
  const BinaryMask tissue(512, 512, 1, kBase, 1);
  SegmentationConfig cfg;
  cfg.ensemble_size = 1;
  const std::vector<PredictorPtr> models{make(PredictorKind::constant, {1.0, 0.0})};
  const auto maps = segment_slide(slide, tissue, models, cfg);
  EXPECT_EQ(maps.downsample_factor, 2);
  EXPECT_EQ(maps.tumor.width(), 256);
  for (const double v : maps.tumor.data()) ASSERT_EQ(v, 1.0);
  for (const double v : maps.stroma.data()) ASSERT_EQ(v, 0.0);
}

TEST(Segmentation, IdentityStitchesToGreenChannel) {
  std::mt19937_64 rng(11);
  for (const int w : {100, 129, 160}) {
    ImageU8 slide = testing::random_image(rng, w, 90, 3);
    slide.set_resolution(kBase);
    const BinaryMask tissue(w, 90, 1, kBase, 1);
    const std::vector<PredictorPtr> models{make(PredictorKind::identity)};
    const auto maps = segment_slide(slide, tissue, models, small_config());
    ASSERT_EQ(maps.windows_skipped, 0u);
    for (int y = 0; y < 90; ++y) {
      for (int x = 0; x < w; ++x) {
        ASSERT_DOUBLE_EQ(maps.tumor(x, y), slide(x, y, 1) / 255.0) << x << "," << y;
      }
    }
  }
}

TEST(Segmentation, EmptyTissueFlagged) {
  const ImageU8 slide(128, 128, 3, kBase);
  const BinaryMask tissue(128, 128, 1, kBase);
  const std::vector<PredictorPtr> models{make(PredictorKind::constant, {1.0})};
  const auto maps = segment_slide(slide, tissue, models, small_config());
  EXPECT_TRUE(maps.empty_tissue);
  for (const double v : maps.tumor.data()) EXPECT_EQ(v, 0.0);
}

TEST(Segmentation, WindowsWithoutTissueSkipped) {
  const ImageU8 slide(128, 128, 3, kBase);
  BinaryMask tissue(128, 128, 1, kBase);
  tissue(5, 5) = 1;
  const std::vector<PredictorPtr> models{make(PredictorKind::constant, {1.0})};
  const auto maps = segment_slide(slide, tissue, models, small_config());
  EXPECT_EQ(maps.windows_total, 16u);
  EXPECT_EQ(maps.windows_skipped, 15u);
  EXPECT_EQ(maps.tumor(5, 5), 1.0);
  EXPECT_EQ(maps.tumor(100, 100), 0.0);
}

TEST(Segmentation, RejectsBadInputs) {
  const ImageU8 slide(64, 64, 3, kBase);
  const BinaryMask tissue(64, 64, 1, kBase, 1);
  const std::vector<PredictorPtr> models{make(PredictorKind::constant)};
  EXPECT_THROW(segment_slide(slide, BinaryMask(63, 64, 1, kBase), models, small_config()), ShapeError);
  EXPECT_THROW(segment_slide(ImageU8(64, 64, 1, kBase), tissue, models, small_config()), ShapeError);
  EXPECT_THROW(segment_slide(slide, tissue, {}, small_config()), ConfigError);
  auto cfg = small_config();
  cfg.pad = 10;
  EXPECT_THROW(segment_slide(slide, tissue, models, cfg), ConfigError);
  cfg = small_config();
  cfg.inference_mpp = 0.75;
  EXPECT_THROW(segment_slide(slide, tissue, models, cfg), ConfigError);
  PredictorSpec det;
  det.kind = PredictorKind::constant;
  const std::vector<PredictorPtr> wrong{make_builtin_predictor(det, Task::detection)};
  EXPECT_THROW(segment_slide(slide, tissue, wrong, small_config()), ConfigError);
}

TEST(Threshold, Examples) {
  SegmentationConfig cfg;
  ProbMap tumor(2, 1);
  ProbMap stroma(2, 1);
  tumor(0, 0) = 0.10;
  stroma(0, 0) = 0.40;
  tumor(1, 0) = 0.25;
  stroma(1, 0) = 0.40;
  const auto labels = threshold_segmentation(tumor, stroma, cfg);
  EXPECT_EQ(labels(0, 0), kLabelStroma);
  EXPECT_EQ(labels(1, 0), kLabelTumor);
  cfg.tumor_precedence = false;
  EXPECT_EQ(threshold_segmentation(tumor, stroma, cfg)(1, 0), kLabelStroma);
}

TEST(Threshold, BoundariesInclusive) {
  SegmentationConfig cfg;
  ProbMap tumor(3, 1);
  ProbMap stroma(3, 1);
  tumor(0, 0) = cfg.tau_tumor;
  stroma(1, 0) = cfg.tau_stroma;
  tumor(2, 0) = 0.19999;
  stroma(2, 0) = 0.34999;
  const auto labels = threshold_segmentation(tumor, stroma, cfg);
  EXPECT_EQ(labels(0, 0), kLabelTumor);
  EXPECT_EQ(labels(1, 0), kLabelStroma);
  EXPECT_EQ(labels(2, 0), kLabelOther);
}

TEST(Finalize, IsolatedTumorPixelRemoved) {
  ProbMap tumor(60, 60, 1, {1.0, 1.0});
  const ProbMap stroma(60, 60, 1, {1.0, 1.0});
  tumor(30, 30) = 0.9;
  const BinaryMask tissue(120, 120, 1, kBase, 1);
  const auto labels = finalize_segmentation(tumor, stroma, tissue, SegmentationConfig{});
  ASSERT_EQ(labels.width(), 120);
  for (const auto v : labels.data()) ASSERT_EQ(v, kLabelOther);
}

TEST(Finalize, LargeTumorKeptAndUpsampled) {
  ProbMap tumor(80, 80, 1, {1.0, 1.0});
  const ProbMap stroma(80, 80, 1, {1.0, 1.0}, 0.5);
  for (int y = 20; y < 60; ++y) {
    for (int x = 20; x < 60; ++x) tumor(x, y) = 0.9;
  }
  const BinaryMask tissue(160, 160, 1, kBase, 1);
  const auto labels = finalize_segmentation(tumor, stroma, tissue, SegmentationConfig{});
  EXPECT_EQ(labels(80, 80), kLabelTumor);
  EXPECT_EQ(labels(50, 50), kLabelTumor);
  EXPECT_EQ(labels(40, 40), kLabelOther);  // corner rounded off by the opening
  EXPECT_EQ(labels(10, 10), kLabelStroma);
  EXPECT_EQ(labels.resolution(), kBase);
}

TEST(Finalize, OutsideTissueIsOther) {
  std::mt19937_64 rng(2);
  const ProbMap tumor = testing::random_prob(rng, 50, 50);
  const ProbMap stroma = testing::random_prob(rng, 50, 50);
  BinaryMask tissue = testing::random_mask(rng, 50, 50, 0.5);
  SegmentationConfig cfg;
  cfg.opening_radius = 1;
  const auto labels = finalize_segmentation(tumor, stroma, tissue, cfg);
  for (std::size_t i = 0; i < labels.data().size(); ++i) {
    const auto v = labels.data()[i];
    ASSERT_TRUE(v == kLabelOther || v == kLabelTumor || v == kLabelStroma);
    if (tissue.data()[i] == 0) ASSERT_EQ(v, kLabelOther);
  }
}

TEST(Finalize, ExtentMismatch) {
  const ProbMap tumor(50, 50, 1, {1.0, 1.0});
  EXPECT_THROW(finalize_segmentation(tumor, tumor, BinaryMask(140, 100, 1, kBase, 1), SegmentationConfig{}),
               ShapeError);
  EXPECT_NO_THROW(finalize_segmentation(tumor, tumor, BinaryMask(101, 99, 1, kBase, 1), SegmentationConfig{}));
}

TEST(Finalize, TumorShrinksAsThresholdRises) {
  std::mt19937_64 rng(8);
  ProbMap tumor(64, 64);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Smooth field so opening keeps some structure.
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) tumor(x, y) = 0.5 + 0.45 * std::sin(x / 9.0) * std::cos(y / 11.0);
  }
  const ProbMap stroma = testing::random_prob(rng, 64, 64);
  const BinaryMask tissue(64, 64, 1, {}, 1);
  SegmentationConfig cfg;
  cfg.opening_radius = 2;
  cfg.inference_mpp = 0.5;
  std::size_t previous = 64 * 64 + 1;
  for (const double tau : {0.05, 0.2, 0.4, 0.6, 0.8, 0.95}) {
    cfg.tau_tumor = tau;
    const auto labels = finalize_segmentation(tumor, stroma, tissue, cfg);
    std::size_t count = 0;
    for (const auto v : labels.data()) count += v == kLabelTumor ? 1 : 0;
    EXPECT_LE(count, previous) << tau;
    previous = count;
  }
}

}  // namespace
}  // namespace tilscore
