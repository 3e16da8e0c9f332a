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

#include "tilscore/train_utils.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "tilscore/morphology.hpp"

namespace tilscore {

namespace {

struct JaccardSums {
  double n = 0.0;
  double d = 0.0;
};

JaccardSums jaccard_sums(std::span<const double> t, std::span<const double> p, double eps) {
  if (t.size() != p.size()) throw ShapeError("jaccard: length mismatch");
  if (!(eps > 0.0)) throw ValidationError("jaccard: epsilon must be > 0");
  double tp = 0.0;
  double tt = 0.0;
  double pp = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] >= 0.0 && t[i] <= 1.0) || !(p[i] >= 0.0 && p[i] <= 1.0)) {
      throw ValidationError("jaccard: values must lie in [0, 1]");
    }
    tp += t[i] * p[i];
    tt += t[i] * t[i];
    pp += p[i] * p[i];
  }
  return {tp + eps, tt + pp - tp + eps};
}

}  // namespace

double jaccard_loss(std::span<const double> y_true, std::span<const double> y_pred, double epsilon) {
  const auto s = jaccard_sums(y_true, y_pred, epsilon);
  return 1.0 - s.n / s.d;
}

std::vector<double> jaccard_loss_grad(std::span<const double> y_true, std::span<const double> y_pred,
                                      double epsilon) {
  const auto s = jaccard_sums(y_true, y_pred, epsilon);
  std::vector<double> g(y_true.size());
  const double d2 = s.d * s.d;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = -(y_true[i] * s.d - s.n * (2.0 * y_pred[i] - y_true[i])) / d2;
  }
  return g;
}

BinaryMask make_pseudo_mask(std::span<const PointXY> points, int width, int height, int radius, Resolution res) {
  if (radius < 0) throw ConfigError("pseudo-mask radius must be >= 0");
  BinaryMask mask(width, height, 1, res, 0);
  const auto disc = disc_element(radius);
  for (const auto& pt : points) {
    const double rx = std::round(pt.x);
    const double ry = std::round(pt.y);
    if (!(rx >= 0.0 && ry >= 0.0 && rx < width && ry < height)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "point (%g, %g) lies outside the %dx%d raster", pt.x, pt.y, width, height);
      throw OutOfBoundsError(buf);
    }
    const int cx = static_cast<int>(rx);
    const int cy = static_cast<int>(ry);
    for (const auto& o : disc.offsets) {
      const int x = cx + o.dx;
      const int y = cy + o.dy;
      if (x >= 0 && y >= 0 && x < width && y < height) mask(x, y) = 1;
    }
  }
  return mask;
}

BalancedBatchSampler::BalancedBatchSampler(std::vector<std::size_t> positives, std::vector<std::size_t> negatives,
                                           std::size_t batch_size, std::uint64_t seed)
    : positives_(std::move(positives)), negatives_(std::move(negatives)), batch_size_(batch_size), rng_(seed) {
  if (batch_size_ < 2) throw ConfigError("batch size must be >= 2");
  std::unordered_set<std::size_t> seen(positives_.begin(), positives_.end());
  if (seen.size() != positives_.size()) throw ValidationError("duplicate positive sample ids");
  for (const auto n : negatives_) {
    if (!seen.insert(n).second) throw ValidationError("sample ids must be unique across positives and negatives");
  }
  if (positives_.empty()) warning_ = "empty positive pool; emitting plain shuffled batches";
  std::shuffle(negatives_.begin(), negatives_.end(), rng_);
}

void BalancedBatchSampler::take_negatives(std::size_t count, Batch& batch) {
  count = std::min(count, negatives_.size());
  const std::size_t first = batch.samples.size();
  while (batch.negatives < count) {
    if (neg_cursor_ == negatives_.size()) {
      std::shuffle(negatives_.begin(), negatives_.end(), rng_);
      neg_cursor_ = 0;
    }
    const std::size_t id = negatives_[neg_cursor_++];
    // Skip ids already drawn into this batch before the reshuffle.
    if (std::find(batch.samples.begin() + static_cast<std::ptrdiff_t>(first), batch.samples.end(), id) !=
        batch.samples.end()) {
      continue;
    }
    batch.samples.push_back(id);
    ++batch.negatives;
  }
}

std::vector<Batch> BalancedBatchSampler::next_epoch() {
  std::vector<Batch> epoch;
  if (positives_.empty()) {
    std::vector<std::size_t> order = negatives_;
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t i = 0; i < order.size(); i += batch_size_) {
      Batch b;
      b.samples.assign(order.begin() + static_cast<std::ptrdiff_t>(i),
                       order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size_)));
      b.negatives = b.samples.size();
      epoch.push_back(std::move(b));
    }
    return epoch;
  }
  std::vector<std::size_t> pos = positives_;
  std::shuffle(pos.begin(), pos.end(), rng_);
  const std::size_t per_batch = negatives_.empty() ? batch_size_ : batch_size_ / 2;
  for (std::size_t i = 0; i < pos.size(); i += per_batch) {
    Batch b;
    const std::size_t k = std::min(per_batch, pos.size() - i);
    b.samples.assign(pos.begin() + static_cast<std::ptrdiff_t>(i), pos.begin() + static_cast<std::ptrdiff_t>(i + k));
    b.positives = k;
    const std::size_t want = k == per_batch ? batch_size_ - per_batch : k;
    if (!negatives_.empty()) take_negatives(want, b);
    epoch.push_back(std::move(b));
  }
  return epoch;
}

std::vector<Batch> balanced_batches(std::vector<std::size_t> positives, std::vector<std::size_t> negatives,
                                    std::size_t batch_size, std::uint64_t seed) {
  BalancedBatchSampler sampler(std::move(positives), std::move(negatives), batch_size, seed);
  return sampler.next_epoch();
}

}  // namespace tilscore
