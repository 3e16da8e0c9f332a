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

/// @file delaunay.hpp
/// @brief 2-D Delaunay triangulation (incremental sweep hull + Lawson edge
/// flips).
///
/// Predicates are exact (128-bit integer arithmetic) when every coordinate
/// is an integer of magnitude below 2^30, which covers pixel-coordinate
/// seeds. Other inputs use extended-precision floating point.

#pragma once

#include <array>
#include <span>
#include <vector>

namespace tilscore {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
  auto operator<=>(const Point2&) const = default;
};

struct Triangulation {
  /// Input points after exact-duplicate removal, sorted by (x, y).
  std::vector<Point2> points;
  /// Counter-clockwise vertex indices into `points`.
  std::vector<std::array<int, 3>> triangles;

  std::array<Point2, 3> corners(std::size_t t) const {
    const auto& tri = triangles[t];
    return {points[static_cast<std::size_t>(tri[0])], points[static_cast<std::size_t>(tri[1])],
            points[static_cast<std::size_t>(tri[2])]};
  }
};

/// Fewer than three distinct points or an all-collinear set yields no
/// triangles. Otherwise the triangles cover the convex hull and no input
/// point lies strictly inside any triangle's circumcircle.
Triangulation delaunay_triangulate(std::span<const Point2> points);

/// Sign of the orientation of (a, b, c): > 0 counter-clockwise.
int orientation(const Point2& a, const Point2& b, const Point2& c);

/// > 0 when d lies strictly inside the circumcircle of counter-clockwise
/// triangle (a, b, c), 0 on it, < 0 outside.
int in_circumcircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

}  // namespace tilscore
