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

#include "tilscore/tumor_bulk.hpp"

#include <algorithm>
#include <cmath>

#include "tilscore/morphology.hpp"

namespace tilscore {

void validate(const BulkParams& p) {
  if (p.opening_radius < 0) throw ConfigError("bulk.opening_radius must be >= 0");
  if (p.min_blob_area_px < 0) throw ConfigError("bulk.min_blob_area_px must be >= 0");
  if (p.sample_step_px < 1) throw ConfigError("bulk.sample_step_px must be >= 1");
  if (!(p.max_edge_um > 0.0)) throw ConfigError("bulk.max_edge_um must be > 0");
}

void rasterize_triangles(BinaryMask& mask, const std::vector<std::array<Point2, 3>>& triangles) {
  const int w = mask.width();
  const int h = mask.height();
  for (const auto& tri : triangles) {
    // Orient counter-clockwise so the inside test is three non-negative edge functions.
    auto a = tri[0];
    auto b = tri[1];
    auto c = tri[2];
    if (orientation(a, b, c) < 0) std::swap(b, c);
    const double min_x = std::min({a.x, b.x, c.x});
    const double max_x = std::max({a.x, b.x, c.x});
    const double min_y = std::min({a.y, b.y, c.y});
    const double max_y = std::max({a.y, b.y, c.y});
    const int x0 = std::max(0, static_cast<int>(std::ceil(min_x)));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor(max_x)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(min_y)));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor(max_y)));
    const auto edge = [](const Point2& p, const Point2& q, double x, double y) {
      return (q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x);
    };
    for (int y = y0; y <= y1; ++y) {
      auto row = mask.row(y);
      for (int x = x0; x <= x1; ++x) {
        const double px = x;
        const double py = y;
        if (edge(a, b, px, py) >= 0.0 && edge(b, c, px, py) >= 0.0 && edge(c, a, px, py) >= 0.0) {
          row[static_cast<std::size_t>(x)] = 1;
        }
      }
    }
  }
}

BulkRegion tumor_bulk_region(const BinaryMask& tumor_mask, const Resolution& res, const BulkParams& params) {
  validate(params);
  validate(res);
  if (tumor_mask.channels() != 1) throw ShapeError("tumor_bulk_region: mask must have one channel");

  BulkRegion bulk;
  bulk.params = params;
  const int w = tumor_mask.width();
  const int h = tumor_mask.height();

  const auto disc = disc_element(params.opening_radius);
  const BinaryMask opened = open(tumor_mask, disc);
  auto labelled = connected_components(opened, nullptr, Connectivity::eight, true);

  BinaryMask kept(w, h, 1, tumor_mask.resolution());
  std::vector<char> keep(labelled.components.size(), 0);
  for (std::size_t k = 0; k < labelled.components.size(); ++k) {
    keep[k] = labelled.components[k].area >= params.min_blob_area_px ? 1 : 0;
  }
  for (std::size_t i = 0; i < kept.data().size(); ++i) {
    const auto l = labelled.labels.data()[i];
    if (l != 0 && keep[static_cast<std::size_t>(l - 1)] != 0) kept.data()[i] = 1;
  }

  // Seeds: sub-sampled boundary pixels and centroids of surviving blobs.
  std::vector<Point2> seeds;
  std::vector<std::int64_t> boundary_seen(labelled.components.size(), 0);
  const BinaryMask boundary = boundary_pixels(kept);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (boundary(x, y) == 0) continue;
      const auto k = static_cast<std::size_t>(labelled.labels(x, y) - 1);
      if (boundary_seen[k]++ % params.sample_step_px == 0) seeds.push_back({double(x), double(y)});
    }
  }
  for (std::size_t k = 0; k < labelled.components.size(); ++k) {
    if (keep[k] == 0) continue;
    const auto& c = labelled.components[k];
    seeds.push_back({std::round(c.centroid_x), std::round(c.centroid_y)});
  }
  bulk.seed_count = seeds.size();

  // Surviving tumor: original tumor pixels the opening trimmed from kept blobs.
  BinaryMask restored = dilate(kept, disc);
  for (std::size_t i = 0; i < restored.data().size(); ++i) {
    restored.data()[i] = (restored.data()[i] != 0 && (tumor_mask.data()[i] != 0 || kept.data()[i] != 0)) ? 1 : 0;
  }

  const Triangulation tri = delaunay_triangulate(seeds);
  if (seeds.size() < 3 || tri.triangles.empty()) {
    bulk.fallback = true;
    bulk.mask = std::move(restored);
    return bulk;
  }

  const auto edge_um = [&](const Point2& p, const Point2& q) {
    return std::hypot((q.x - p.x) * res.mpp_x, (q.y - p.y) * res.mpp_y);
  };
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    const auto corners = tri.corners(t);
    const double longest = std::max({edge_um(corners[0], corners[1]), edge_um(corners[1], corners[2]),
                                     edge_um(corners[2], corners[0])});
    if (longest <= params.max_edge_um) bulk.triangles.push_back(corners);
  }

  BinaryMask mask = std::move(restored);
  rasterize_triangles(mask, bulk.triangles);
  bulk.mask = fill_holes(mask);
  bulk.mask.set_resolution(tumor_mask.resolution());
  return bulk;
}

}  // namespace tilscore
