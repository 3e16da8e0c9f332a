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

#include "tilscore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace tilscore {

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw ShapeError("dice: mask shapes differ");
  std::size_t na = 0;
  std::size_t nb = 0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const bool fa = a.data()[i] != 0;
    const bool fb = b.data()[i] != 0;
    na += fa;
    nb += fb;
    both += fa && fb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double tumor_stroma_dice(const LabelMask& pred, const LabelMask& gt) {
  if (!pred.same_shape(gt) || pred.channels() != 1) throw ShapeError("tumor_stroma_dice: mask shapes differ");
  double sum = 0.0;
  for (const std::uint8_t label : {kLabelTumor, kLabelStroma}) {
    std::size_t np = 0;
    std::size_t ng = 0;
    std::size_t both = 0;
    for (std::size_t i = 0; i < pred.data().size(); ++i) {
      const auto p = pred.data()[i];
      const auto g = gt.data()[i];
      if (p == kLabelIgnore || g == kLabelIgnore) continue;
      const bool fp = p == label;
      const bool fg = g == label;
      np += fp;
      ng += fg;
      both += fp && fg;
    }
    sum += np + ng == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(np + ng);
  }
  return sum / 2.0;
}

namespace {

std::vector<std::size_t> priority_order(std::span<const Detection> pred) {
  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pred[a].probability != pred[b].probability) return pred[a].probability > pred[b].probability;
    if (pred[a].y != pred[b].y) return pred[a].y < pred[b].y;
    if (pred[a].x != pred[b].x) return pred[a].x < pred[b].x;
    return a < b;
  });
  return order;
}

std::int64_t grid_key(std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xFFFFFFFF); }

}  // namespace

MatchResult match_detections(std::span<const Detection> pred, std::span<const PointXY> gt, double hit_radius_um,
                             const Resolution& res) {
  if (!(hit_radius_um > 0.0)) throw ConfigError("hit radius must be > 0");
  validate(res);
  MatchResult result;
  result.hit_radius_um = hit_radius_um;

  const double cell_x = hit_radius_um / res.mpp_x;
  const double cell_y = hit_radius_um / res.mpp_y;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    cells[grid_key(static_cast<std::int64_t>(std::floor(gt[g].x / cell_x)),
                   static_cast<std::int64_t>(std::floor(gt[g].y / cell_y)))]
        .push_back(g);
  }
  std::vector<char> claimed(gt.size(), 0);
  const double r2 = hit_radius_um * hit_radius_um;
  for (const std::size_t p : priority_order(pred)) {
    const auto cx = static_cast<std::int64_t>(std::floor(pred[p].x / cell_x));
    const auto cy = static_cast<std::int64_t>(std::floor(pred[p].y / cell_y));
    std::size_t best = gt.size();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = cells.find(grid_key(cx + dx, cy + dy));
        if (it == cells.end()) continue;
        for (const std::size_t g : it->second) {
          if (claimed[g] != 0) continue;
          const double ddx = (pred[p].x - gt[g].x) * res.mpp_x;
          const double ddy = (pred[p].y - gt[g].y) * res.mpp_y;
          const double d2 = ddx * ddx + ddy * ddy;
          if (d2 > r2) continue;
          if (d2 < best_d2 || (d2 == best_d2 && g < best)) {
            best = g;
            best_d2 = d2;
          }
        }
      }
    }
    if (best < gt.size()) {
      claimed[best] = 1;
      result.true_positives.emplace_back(p, best);
    } else {
      result.false_positives.push_back(p);
    }
  }
  std::sort(result.false_positives.begin(), result.false_positives.end());
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (claimed[g] == 0) result.false_negatives.push_back(g);
  }
  return result;
}

double detection_f1(const MatchResult& match) {
  const auto tp = static_cast<double>(match.tp());
  const auto denom = 2.0 * tp + static_cast<double>(match.fp()) + static_cast<double>(match.fn());
  if (denom == 0.0) return 1.0;
  return 2.0 * tp / denom;
}

FrocResult froc(std::span<const FrocCase> cases, std::span<const double> fp_rates, double hit_radius_um) {
  if (fp_rates.empty()) throw ConfigError("froc: empty FP-rate list");
  std::size_t total_gt = 0;
  double total_area = 0.0;
  // (probability, is true positive) over the cohort.
  std::vector<std::pair<double, bool>> scored;
  for (const auto& c : cases) {
    total_gt += c.ground_truth.size();
    total_area += c.area_mm2;
    const MatchResult m = match_detections(c.predictions, c.ground_truth, hit_radius_um, c.resolution);
    for (const auto& [p, g] : m.true_positives) scored.emplace_back(c.predictions[p].probability, true);
    for (const auto p : m.false_positives) scored.emplace_back(c.predictions[p].probability, false);
  }
  if (total_gt == 0) throw UndefinedMetricError("froc: no ground-truth detections");
  if (!(total_area > 0.0)) throw UndefinedMetricError("froc: total area must be positive");

  // Greedy matching in descending probability means the matches of
  // {p >= t} are a prefix of the full matching, so one pass serves every
  // threshold.
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  FrocResult result;
  result.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    const double t = scored[i].first;
    for (; i < scored.size() && scored[i].first == t; ++i) (scored[i].second ? tp : fp) += 1;
    result.curve.push_back({t, static_cast<double>(tp) / static_cast<double>(total_gt),
                            static_cast<double>(fp) / total_area});
  }

  double sum = 0.0;
  for (const double rate : fp_rates) {
    double sens = 0.0;
    for (const auto& pt : result.curve) {
      if (pt.fp_per_mm2 <= rate) sens = pt.sensitivity;
    }
    result.sensitivities.push_back(sens);
    sum += sens;
  }
  result.score = sum / static_cast<double>(fp_rates.size());
  return result;
}

double froc_score(std::span<const FrocCase> cases, std::span<const double> fp_rates, double hit_radius_um) {
  return froc(cases, fp_rates, hit_radius_um).score;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson_r: length mismatch");
  if (x.size() < 2) throw UndefinedMetricError("pearson_r: need at least two samples");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetricError("pearson_r: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace tilscore
