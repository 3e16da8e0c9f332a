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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "tilscore/delaunay.hpp"

namespace tilscore {
namespace {

double signed_area(const std::array<Point2, 3>& t) {
  return 0.5 * ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y));
}

/// Brute-force empty-circumcircle check in long double.
bool strictly_inside_circle(const std::array<Point2, 3>& t, const Point2& d) {
  const long double ax = t[0].x - d.x, ay = t[0].y - d.y;
  const long double bx = t[1].x - d.x, by = t[1].y - d.y;
  const long double cx = t[2].x - d.x, cy = t[2].y - d.y;
  const long double det = (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay) +
                          (cx * cx + cy * cy) * (ax * by - bx * ay);
  return det > 1e-9L;
}

double hull_area(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Point2> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  double a = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& p = h[i];
    const auto& q = h[(i + 1) % h.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

void expect_delaunay(const std::vector<Point2>& pts) {
  const Triangulation tri = delaunay_triangulate(pts);
  double area = 0.0;
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    const auto c = tri.corners(t);
    ASSERT_GT(signed_area(c), 0.0) << "triangle " << t << " not counter-clockwise";
    area += signed_area(c);
    for (const auto& p : tri.points) {
      if (p == c[0] || p == c[1] || p == c[2]) continue;
      ASSERT_FALSE(strictly_inside_circle(c, p)) << "point inside circumcircle of triangle " << t;
    }
  }
  EXPECT_NEAR(area, hull_area(pts), 1e-6 * std::max(1.0, area));
}

TEST(Delaunay, ThreePointsOneTriangle) {
  const std::vector<Point2> pts{{0, 0}, {4, 0}, {1, 3}};
  const auto tri = delaunay_triangulate(pts);
  ASSERT_EQ(tri.triangles.size(), 1u);
  EXPECT_DOUBLE_EQ(signed_area(tri.corners(0)), 6.0);
}

TEST(Delaunay, UnitSquareTwoTriangles) {
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const auto tri = delaunay_triangulate(pts);
  ASSERT_EQ(tri.triangles.size(), 2u);
  EXPECT_DOUBLE_EQ(signed_area(tri.corners(0)) + signed_area(tri.corners(1)), 1.0);
}

TEST(Delaunay, DegenerateInputs) {
  EXPECT_TRUE(delaunay_triangulate(std::vector<Point2>{}).triangles.empty());
  EXPECT_TRUE(delaunay_triangulate(std::vector<Point2>{{1, 1}, {2, 2}}).triangles.empty());
  EXPECT_TRUE(delaunay_triangulate(std::vector<Point2>{{0, 0}, {1, 1}, {2, 2}, {5, 5}}).triangles.empty());
  EXPECT_TRUE(delaunay_triangulate(std::vector<Point2>{{3, 3}, {3, 3}, {3, 3}}).triangles.empty());
}

TEST(Delaunay, DuplicatesRemoved) {
  const std::vector<Point2> pts{{0, 0}, {2, 0}, {0, 2}, {2, 0}, {0, 0}};
  const auto tri = delaunay_triangulate(pts);
  EXPECT_EQ(tri.points.size(), 3u);
  EXPECT_EQ(tri.triangles.size(), 1u);
}

TEST(Delaunay, RandomSetsEmptyCircumcircle) {
  std::mt19937_64 rng(50);
  std::uniform_real_distribution<double> d(0.0, 1000.0);
  for (const int n : {4, 10, 50, 100}) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Point2> pts(static_cast<std::size_t>(n));
      for (auto& p : pts) p = {d(rng), d(rng)};
      expect_delaunay(pts);
    }
  }
}

TEST(Delaunay, IntegerGridWithCocircularPoints) {
  // Many co-circular quadruples; any valid choice of diagonal is accepted.
  std::vector<Point2> pts;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 9; ++x) pts.push_back({static_cast<double>(x * 50), static_cast<double>(y * 50)});
  }
  const auto tri = delaunay_triangulate(pts);
  EXPECT_EQ(tri.triangles.size(), 2u * 8u * 7u);
  expect_delaunay(pts);
}

TEST(Delaunay, TriangleCountFromEuler) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(0, 5000);
  std::vector<Point2> pts(400);
  for (auto& p : pts) p = {static_cast<double>(d(rng)), static_cast<double>(d(rng))};
  const auto tri = delaunay_triangulate(pts);
  expect_delaunay(pts);
  // Every triangle edge is shared by at most two triangles.
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : tri.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[static_cast<std::size_t>(k)];
      const int b = t[static_cast<std::size_t>((k + 1) % 3)];
      ++uses[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [e, n] : uses) EXPECT_LE(n, 2);
}

TEST(Predicates, OrientationAndCircle) {
  EXPECT_GT(orientation({0, 0}, {1, 0}, {0, 1}), 0);
  EXPECT_LT(orientation({0, 0}, {0, 1}, {1, 0}), 0);
  EXPECT_EQ(orientation({0, 0}, {1, 1}, {2, 2}), 0);
  EXPECT_GT(in_circumcircle({0, 0}, {2, 0}, {0, 2}, {1, 1}), 0);
  EXPECT_EQ(in_circumcircle({0, 0}, {2, 0}, {0, 2}, {2, 2}), 0);
  EXPECT_LT(in_circumcircle({0, 0}, {2, 0}, {0, 2}, {3, 3}), 0);
}

}  // namespace
}  // namespace tilscore
