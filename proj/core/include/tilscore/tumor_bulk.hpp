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

/// @file tumor_bulk.hpp
/// @brief Tumor-bulk region estimation from a binary tumor mask.
///
/// Steps:
///   1. open the tumor mask with a disc and drop components smaller than
///      `min_blob_area_px`;
///   2. seed points = boundary pixels of each surviving component taken every
///      `sample_step_px` in raster order, plus each component's rounded
///      centroid;
///   3. Delaunay-triangulate the seeds;
///   4. keep triangles whose longest edge is at most `max_edge_um`;
///   5. rasterize the kept triangles, add back the surviving tumor (original
///      tumor pixels within the opening radius of the opened blobs) and fill
///      interior holes.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tilscore/delaunay.hpp"
#include "tilscore/raster.hpp"

namespace tilscore {

struct BulkParams {
  int opening_radius = 10;
  std::int64_t min_blob_area_px = 500;
  int sample_step_px = 50;
  double max_edge_um = 1000.0;
};

void validate(const BulkParams& params);

struct BulkRegion {
  std::vector<std::array<Point2, 3>> triangles;  ///< kept triangles, base pixels
  BinaryMask mask;
  BulkParams params;
  std::size_t seed_count = 0;
  /// Fewer than three usable seeds: the mask is the cleaned tumor mask.
  bool fallback = false;
};

BulkRegion tumor_bulk_region(const BinaryMask& tumor_mask, const Resolution& res, const BulkParams& params = {});

/// Sets pixels whose centre (integer coordinates) lies inside or on the edge
/// of any triangle.
void rasterize_triangles(BinaryMask& mask, const std::vector<std::array<Point2, 3>>& triangles);

}  // namespace tilscore
