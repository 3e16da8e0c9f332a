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

/// @file train_utils.hpp
/// @brief Training support: Jaccard loss and gradient, pseudo-masks from
/// point annotations, class-balanced batch sampling.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tilscore/detection.hpp"
#include "tilscore/raster.hpp"

namespace tilscore {

inline constexpr double kJaccardEpsilon = 1.0;

/// 1 - (sum t*p + eps) / (sum t^2 + sum p^2 - sum t*p + eps).
/// Throws ShapeError on length mismatch, ValidationError outside [0, 1].
double jaccard_loss(std::span<const double> y_true, std::span<const double> y_pred, double epsilon = kJaccardEpsilon);

/// dL/dy_pred.
std::vector<double> jaccard_loss_grad(std::span<const double> y_true, std::span<const double> y_pred,
                                      double epsilon = kJaccardEpsilon);

/// Union of digital discs (dx^2 + dy^2 <= r^2) around each point, rounded to
/// the nearest pixel. Throws OutOfBoundsError naming the first point that
/// falls outside the raster.
BinaryMask make_pseudo_mask(std::span<const PointXY> points, int width, int height, int radius = 5,
                            Resolution res = {});

struct Batch {
  std::vector<std::size_t> samples;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Every positive once per epoch, paired with an equal number of negatives
/// drawn without replacement; the negative order is reshuffled whenever it
/// runs out. With no positives the sampler emits plain shuffled batches of
/// negatives and sets warning().
class BalancedBatchSampler {
 public:
  BalancedBatchSampler(std::vector<std::size_t> positives, std::vector<std::size_t> negatives, std::size_t batch_size,
                       std::uint64_t seed);

  std::vector<Batch> next_epoch();

  const std::string& warning() const noexcept { return warning_; }
  std::size_t batch_size() const noexcept { return batch_size_; }

 private:
  void take_negatives(std::size_t count, Batch& batch);

  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
  std::size_t neg_cursor_ = 0;
  std::string warning_;
};

std::vector<Batch> balanced_batches(std::vector<std::size_t> positives, std::vector<std::size_t> negatives,
                                    std::size_t batch_size, std::uint64_t seed);

}  // namespace tilscore
