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

#include "tilscore/morphology.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "tilscore/parallel.hpp"

namespace tilscore {

StructuringElement disc_element(int radius) {
  if (radius < 0) throw ValidationError("disc radius must be non-negative");
  StructuringElement e;
  e.radius = radius;
  const int r2 = radius * radius;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= r2) e.offsets.push_back({dx, dy});
    }
  }
  return e;
}

namespace {

struct Run {
  int dy;
  int lo;
  int hi;
};

std::vector<Run> element_runs(const StructuringElement& e) {
  std::map<int, std::vector<int>> rows;
  for (const auto& o : e.offsets) rows[o.dy].push_back(o.dx);
  std::vector<Run> runs;
  for (auto& [dy, dxs] : rows) {
    std::sort(dxs.begin(), dxs.end());
    dxs.erase(std::unique(dxs.begin(), dxs.end()), dxs.end());
    if (dxs.back() - dxs.front() + 1 != static_cast<int>(dxs.size())) {
      throw ValidationError("structuring element rows must be contiguous runs");
    }
    runs.push_back({dy, dxs.front(), dxs.back()});
  }
  return runs;
}

constexpr int kBandRows = 64;

/// One pass of dilation (any) or erosion (all) over row bands.
BinaryMask morph_pass(const BinaryMask& mask, const std::vector<Run>& runs, bool dilation) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask out(w, h, 1, mask.resolution());
  if (mask.empty() || runs.empty()) return out;

  int min_dy = 0;
  int max_dy = 0;
  for (const auto& r : runs) {
    min_dy = std::min(min_dy, r.dy);
    max_dy = std::max(max_dy, r.dy);
  }
  const std::size_t bands = static_cast<std::size_t>((h + kBandRows - 1) / kBandRows);
  const auto stride = static_cast<std::size_t>(w) + 1;

  parallel_for(bands, [&](std::size_t band) {
    const int y0 = static_cast<int>(band) * kBandRows;
    const int y1 = std::min(h, y0 + kBandRows);
    // Source rows touched by this band.
    const int s0 = std::max(0, dilation ? y0 - max_dy : y0 + min_dy);
    const int s1 = std::min(h, dilation ? y1 - min_dy : y1 + max_dy);
    if (s1 <= s0) return;
    std::vector<std::int32_t> prefix(static_cast<std::size_t>(s1 - s0) * stride, 0);
    for (int sy = s0; sy < s1; ++sy) {
      const auto src = mask.row(sy);
      auto* p = prefix.data() + static_cast<std::size_t>(sy - s0) * stride;
      for (int x = 0; x < w; ++x) p[x + 1] = p[x] + (src[static_cast<std::size_t>(x)] != 0 ? 1 : 0);
    }
    for (int y = y0; y < y1; ++y) {
      auto dst = out.row(y);
      for (int x = 0; x < w; ++x) {
        bool result = !dilation;
        for (const auto& r : runs) {
          if (dilation) {
            const int sy = y - r.dy;
            if (sy < 0 || sy >= h) continue;
            const int a = std::max(0, x - r.hi);
            const int b = std::min(w - 1, x - r.lo);
            if (a > b) continue;
            const auto* p = prefix.data() + static_cast<std::size_t>(sy - s0) * stride;
            if (p[b + 1] - p[a] > 0) {
              result = true;
              break;
            }
          } else {
            const int sy = y + r.dy;
            const int a = x + r.lo;
            const int b = x + r.hi;
            if (sy < 0 || sy >= h || a < 0 || b >= w) {
              result = false;
              break;
            }
            const auto* p = prefix.data() + static_cast<std::size_t>(sy - s0) * stride;
            if (p[b + 1] - p[a] != b - a + 1) {
              result = false;
              break;
            }
          }
        }
        dst[static_cast<std::size_t>(x)] = result ? 1 : 0;
      }
    }
  });
  return out;
}

}  // namespace

BinaryMask binary_morphology(const BinaryMask& mask, const StructuringElement& element, MorphOp op) {
  if (mask.channels() != 1) throw ShapeError("binary_morphology: mask must have one channel");
  if (element.offsets.empty()) throw ValidationError("binary_morphology: empty structuring element");
  const auto runs = element_runs(element);
  switch (op) {
    case MorphOp::dilate: return morph_pass(mask, runs, true);
    case MorphOp::erode: return morph_pass(mask, runs, false);
    case MorphOp::open: return morph_pass(morph_pass(mask, runs, false), runs, true);
    case MorphOp::close: return morph_pass(morph_pass(mask, runs, true), runs, false);
  }
  return mask;
}

BinaryMask fill_holes(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask out(w, h, 1, mask.resolution());
  if (mask.empty()) return out;
  // 0 = unvisited background, 1 = foreground, 2 = background reached from the border.
  std::vector<std::uint8_t> state(mask.pixel_count());
  for (std::size_t i = 0; i < state.size(); ++i) state[i] = mask.data()[i] != 0 ? 1 : 0;
  std::vector<std::size_t> stack;
  const auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
    if (state[i] == 0) {
      state[i] = 2;
      stack.push_back(i);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  for (std::size_t i = 0; i < state.size(); ++i) out.data()[i] = state[i] == 2 ? 0 : 1;
  return out;
}

namespace {

std::int32_t find_root(std::vector<std::int32_t>& parent, std::int32_t a) {
  while (parent[static_cast<std::size_t>(a)] != a) {
    parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
    a = parent[static_cast<std::size_t>(a)];
  }
  return a;
}

void unite(std::vector<std::int32_t>& parent, std::int32_t a, std::int32_t b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a == b) return;
  // Smaller provisional label wins so roots keep raster order.
  if (a < b) {
    parent[static_cast<std::size_t>(b)] = a;
  } else {
    parent[static_cast<std::size_t>(a)] = b;
  }
}

}  // namespace

ComponentLabels connected_components(const BinaryMask& mask, const ProbMap* prob_map, Connectivity connectivity,
                                     bool keep_labels) {
  if (mask.channels() != 1) throw ShapeError("connected_components: mask must have one channel");
  if (prob_map != nullptr) require_same_extent(mask, *prob_map, "connected_components");
  const int w = mask.width();
  const int h = mask.height();

  // First pass: provisional labels with union-find over already-seen neighbours.
  LabelImage provisional(w, h, 1, mask.resolution());
  std::vector<std::int32_t> parent{0};
  const bool eight = connectivity == Connectivity::eight;
  for (int y = 0; y < h; ++y) {
    const auto src = mask.row(y);
    for (int x = 0; x < w; ++x) {
      if (src[static_cast<std::size_t>(x)] == 0) continue;
      std::int32_t neighbours[4];
      int n = 0;
      if (x > 0 && provisional(x - 1, y) != 0) neighbours[n++] = provisional(x - 1, y);
      if (y > 0) {
        if (provisional(x, y - 1) != 0) neighbours[n++] = provisional(x, y - 1);
        if (eight && x > 0 && provisional(x - 1, y - 1) != 0) neighbours[n++] = provisional(x - 1, y - 1);
        if (eight && x + 1 < w && provisional(x + 1, y - 1) != 0) neighbours[n++] = provisional(x + 1, y - 1);
      }
      if (n == 0) {
        const auto label = static_cast<std::int32_t>(parent.size());
        parent.push_back(label);
        provisional(x, y) = label;
        continue;
      }
      std::int32_t best = neighbours[0];
      for (int k = 1; k < n; ++k) best = std::min(best, neighbours[k]);
      provisional(x, y) = best;
      for (int k = 0; k < n; ++k) unite(parent, best, neighbours[k]);
    }
  }

  // Provisional labels are created in raster order and roots are the minimum
  // label of their set, so numbering roots in label order yields components
  // ordered by first pixel.
  std::vector<std::int32_t> final_id(parent.size(), 0);
  std::int32_t next = 0;
  for (std::size_t l = 1; l < parent.size(); ++l) {
    const auto root = find_root(parent, static_cast<std::int32_t>(l));
    if (root == static_cast<std::int32_t>(l)) final_id[l] = ++next;
  }
  for (std::size_t l = 1; l < parent.size(); ++l) {
    final_id[l] = final_id[static_cast<std::size_t>(find_root(parent, static_cast<std::int32_t>(l)))];
  }

  ComponentLabels result;
  result.components.resize(static_cast<std::size_t>(next));
  std::vector<std::int64_t> sum_x(static_cast<std::size_t>(next), 0);
  std::vector<std::int64_t> sum_y(static_cast<std::size_t>(next), 0);
  std::vector<double> sum_p(static_cast<std::size_t>(next), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto& label = provisional(x, y);
      if (label == 0) continue;
      label = final_id[static_cast<std::size_t>(label)];
      const auto k = static_cast<std::size_t>(label - 1);
      auto& c = result.components[k];
      if (c.area == 0) {
        c.id = label;
        c.min_x = c.max_x = c.first_x = x;
        c.min_y = c.max_y = c.first_y = y;
      }
      ++c.area;
      c.min_x = std::min(c.min_x, x);
      c.max_x = std::max(c.max_x, x);
      c.max_y = std::max(c.max_y, y);
      sum_x[k] += x;
      sum_y[k] += y;
      if (prob_map != nullptr) sum_p[k] += (*prob_map)(x, y);
    }
  }
  for (std::size_t k = 0; k < result.components.size(); ++k) {
    auto& c = result.components[k];
    const auto area = static_cast<double>(c.area);
    c.centroid_x = static_cast<double>(sum_x[k]) / area;
    c.centroid_y = static_cast<double>(sum_y[k]) / area;
    c.mean_value = prob_map != nullptr ? sum_p[k] / area : 0.0;
  }
  if (keep_labels) result.labels = std::move(provisional);
  return result;
}

BinaryMask remove_small_components(const BinaryMask& mask, std::int64_t min_area, Connectivity connectivity) {
  auto labelled = connected_components(mask, nullptr, connectivity, true);
  BinaryMask out(mask.width(), mask.height(), 1, mask.resolution());
  const auto& labels = labelled.labels.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = labels[i];
    if (l != 0 && labelled.components[static_cast<std::size_t>(l - 1)].area >= min_area) out.data()[i] = 1;
  }
  return out;
}

BinaryMask boundary_pixels(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryMask out(w, h, 1, mask.resolution());
  const auto fg = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && mask(x, y) != 0; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!fg(x, y)) continue;
      if (!fg(x - 1, y) || !fg(x + 1, y) || !fg(x, y - 1) || !fg(x, y + 1)) out(x, y) = 1;
    }
  }
  return out;
}

}  // namespace tilscore
