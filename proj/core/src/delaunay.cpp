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

#include "tilscore/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace tilscore {

namespace {

__extension__ typedef __int128 i128;

bool integral_coordinates(const Point2& p) {
  constexpr double kLimit = 1073741824.0;  // 2^30
  return std::abs(p.x) < kLimit && std::abs(p.y) < kLimit && std::floor(p.x) == p.x && std::floor(p.y) == p.y;
}

template <typename T>
int sign(T v) {
  return (v > T(0)) - (v < T(0));
}

int orientation_exact(const Point2& a, const Point2& b, const Point2& c) {
  const auto ax = static_cast<std::int64_t>(a.x), ay = static_cast<std::int64_t>(a.y);
  const auto bx = static_cast<std::int64_t>(b.x), by = static_cast<std::int64_t>(b.y);
  const auto cx = static_cast<std::int64_t>(c.x), cy = static_cast<std::int64_t>(c.y);
  const i128 det = static_cast<i128>(bx - ax) * (cy - ay) - static_cast<i128>(by - ay) * (cx - ax);
  return sign(det);
}

int incircle_exact(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const auto dx = static_cast<std::int64_t>(d.x), dy = static_cast<std::int64_t>(d.y);
  const i128 adx = static_cast<std::int64_t>(a.x) - dx, ady = static_cast<std::int64_t>(a.y) - dy;
  const i128 bdx = static_cast<std::int64_t>(b.x) - dx, bdy = static_cast<std::int64_t>(b.y) - dy;
  const i128 cdx = static_cast<std::int64_t>(c.x) - dx, cdy = static_cast<std::int64_t>(c.y) - dy;
  const i128 alift = adx * adx + ady * ady;
  const i128 blift = bdx * bdx + bdy * bdy;
  const i128 clift = cdx * cdx + cdy * cdy;
  const i128 det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) + clift * (adx * bdy - bdx * ady);
  return sign(det);
}

int incircle_float(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  using ld = long double;
  const ld adx = ld(a.x) - d.x, ady = ld(a.y) - d.y;
  const ld bdx = ld(b.x) - d.x, bdy = ld(b.y) - d.y;
  const ld cdx = ld(c.x) - d.x, cdy = ld(c.y) - d.y;
  const ld alift = adx * adx + ady * ady;
  const ld blift = bdx * bdx + bdy * bdy;
  const ld clift = cdx * cdx + cdy * cdy;
  const ld det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) + clift * (adx * bdy - bdx * ady);
  const ld permanent = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                       blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                       clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
  // Treat results within rounding noise as cocircular so flips terminate.
  if (std::abs(det) <= permanent * 1e-15L) return 0;
  return sign(det);
}

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

int orientation(const Point2& a, const Point2& b, const Point2& c) {
  if (integral_coordinates(a) && integral_coordinates(b) && integral_coordinates(c)) {
    return orientation_exact(a, b, c);
  }
  using ld = long double;
  const ld l = (ld(b.x) - a.x) * (ld(c.y) - a.y);
  const ld r = (ld(b.y) - a.y) * (ld(c.x) - a.x);
  const ld det = l - r;
  if (std::abs(det) <= (std::abs(l) + std::abs(r)) * 1e-18L) return 0;
  return sign(det);
}

int in_circumcircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  if (integral_coordinates(a) && integral_coordinates(b) && integral_coordinates(c) && integral_coordinates(d)) {
    return incircle_exact(a, b, c, d);
  }
  return incircle_float(a, b, c, d);
}

Triangulation delaunay_triangulate(std::span<const Point2> input) {
  Triangulation out;
  out.points.assign(input.begin(), input.end());
  std::sort(out.points.begin(), out.points.end());
  out.points.erase(std::unique(out.points.begin(), out.points.end()), out.points.end());
  const auto& pts = out.points;
  const int n = static_cast<int>(pts.size());
  if (n < 3) return out;

  int first_off_line = -1;
  for (int k = 2; k < n; ++k) {
    if (orientation(pts[0], pts[1], pts[static_cast<std::size_t>(k)]) != 0) {
      first_off_line = k;
      break;
    }
  }
  if (first_off_line < 0) return out;

  auto& tris = out.triangles;
  const auto P = [&](int i) -> const Point2& { return pts[static_cast<std::size_t>(i)]; };
  const auto add_ccw = [&](int a, int b, int c) {
    if (orientation(P(a), P(b), P(c)) > 0) {
      tris.push_back({a, b, c});
    } else {
      tris.push_back({a, c, b});
    }
  };

  // Points 0..k-1 are collinear and sorted along their line; fan them to k.
  const int k = first_off_line;
  for (int i = 0; i + 1 < k; ++i) add_ccw(i, i + 1, k);
  std::vector<int> hull;
  if (orientation(P(0), P(k - 1), P(k)) > 0) {
    for (int i = 0; i < k; ++i) hull.push_back(i);
    hull.push_back(k);
  } else {
    hull.push_back(0);
    hull.push_back(k);
    for (int i = k - 1; i >= 1; --i) hull.push_back(i);
  }

  // Sweep: every later point is lexicographically largest so far, hence
  // strictly outside the current hull. Connect it to all visible edges.
  for (int q = k + 1; q < n; ++q) {
    const int h = static_cast<int>(hull.size());
    std::vector<char> visible(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
      visible[static_cast<std::size_t>(i)] = orientation(P(hull[static_cast<std::size_t>(i)]),
                                                         P(hull[static_cast<std::size_t>((i + 1) % h)]), P(q)) < 0;
    }
    int start = -1;
    for (int i = 0; i < h; ++i) {
      if (visible[static_cast<std::size_t>(i)] && !visible[static_cast<std::size_t>((i + h - 1) % h)]) {
        start = i;
        break;
      }
    }
    if (start < 0) continue;  // unreachable for distinct sorted input
    int count = 0;
    for (int i = start; visible[static_cast<std::size_t>(i % h)] && count < h; ++i, ++count) {
      const int a = hull[static_cast<std::size_t>(i % h)];
      const int b = hull[static_cast<std::size_t>((i + 1) % h)];
      tris.push_back({b, a, q});
    }
    // Replace the vertices strictly inside the visible chain by q.
    std::vector<int> next;
    next.reserve(static_cast<std::size_t>(h - count + 2));
    const int end = (start + count) % h;
    for (int i = end; i != start; i = (i + 1) % h) next.push_back(hull[static_cast<std::size_t>(i)]);
    next.push_back(hull[static_cast<std::size_t>(start)]);
    next.push_back(q);
    hull = std::move(next);
  }

  // Lawson flips until every interior edge is locally Delaunay.
  std::unordered_map<std::uint64_t, int> owner;
  owner.reserve(tris.size() * 3);
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    const auto& tri = tris[static_cast<std::size_t>(t)];
    for (int e = 0; e < 3; ++e) owner[edge_key(tri[static_cast<std::size_t>(e)], tri[static_cast<std::size_t>((e + 1) % 3)])] = t;
  }
  std::vector<std::pair<int, int>> stack;
  for (const auto& tri : tris) {
    for (int e = 0; e < 3; ++e) stack.emplace_back(tri[static_cast<std::size_t>(e)], tri[static_cast<std::size_t>((e + 1) % 3)]);
  }
  const auto third = [](const std::array<int, 3>& tri, int a, int b) {
    for (const int v : tri) {
      if (v != a && v != b) return v;
    }
    return -1;
  };
  std::size_t budget = 64 * static_cast<std::size_t>(n) * static_cast<std::size_t>(n) + 1024;
  while (!stack.empty() && budget-- > 0) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    const auto it1 = owner.find(edge_key(a, b));
    const auto it2 = owner.find(edge_key(b, a));
    if (it1 == owner.end() || it2 == owner.end()) continue;
    const int t1 = it1->second;
    const int t2 = it2->second;
    const int c = third(tris[static_cast<std::size_t>(t1)], a, b);
    const int d = third(tris[static_cast<std::size_t>(t2)], a, b);
    if (in_circumcircle(P(a), P(b), P(c), P(d)) <= 0) continue;
    owner.erase(edge_key(a, b));
    owner.erase(edge_key(b, a));
    tris[static_cast<std::size_t>(t1)] = {a, d, c};
    tris[static_cast<std::size_t>(t2)] = {d, b, c};
    owner[edge_key(a, d)] = t1;
    owner[edge_key(d, c)] = t1;
    owner[edge_key(c, a)] = t1;
    owner[edge_key(d, b)] = t2;
    owner[edge_key(b, c)] = t2;
    owner[edge_key(c, d)] = t2;
    stack.emplace_back(a, d);
    stack.emplace_back(d, b);
    stack.emplace_back(b, c);
    stack.emplace_back(c, a);
  }
  return out;
}

}  // namespace tilscore
