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

#include <cmath>
#include <random>

#include "tilscore/error.hpp"
#include "tilscore/morphology.hpp"
#include "tilscore/tumor_bulk.hpp"

namespace tilscore {
namespace {

const Resolution kRes{0.5, 0.5};

void fill_rect(BinaryMask& m, int x0, int y0, int x1, int y1) {
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m(x, y) = 1;
  }
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    if (a.data()[i] != 0 && b.data()[i] == 0) return false;
  }
  return true;
}

TEST(TumorBulk, EmptyMaskFallsBack) {
  const BinaryMask m(300, 300, 1, kRes);
  const auto bulk = tumor_bulk_region(m, kRes);
  EXPECT_TRUE(bulk.fallback);
  EXPECT_EQ(count_foreground(bulk.mask), 0u);
  EXPECT_TRUE(bulk.triangles.empty());
}

TEST(TumorBulk, SolidSquareCoveredTightly) {
  BinaryMask m(600, 600, 1, kRes);
  fill_rect(m, 200, 200, 400, 400);
  const auto bulk = tumor_bulk_region(m, kRes);
  EXPECT_FALSE(bulk.fallback);
  EXPECT_TRUE(subset(m, bulk.mask));
  const double area = static_cast<double>(count_foreground(bulk.mask));
  EXPECT_LE(std::abs(area - 40000.0), 4000.0);
}

TEST(TumorBulk, NearbyBlobsBridged) {
  // 800 px = 400 um gap at 0.5 mpp.
  BinaryMask m(1300, 400, 1, kRes);
  fill_rect(m, 100, 150, 200, 250);
  fill_rect(m, 1000, 150, 1100, 250);
  const auto bulk = tumor_bulk_region(m, kRes);
  EXPECT_TRUE(subset(m, bulk.mask));
  EXPECT_EQ(connected_components(bulk.mask).components.size(), 1u);
  EXPECT_EQ(bulk.mask(600, 200), 1);
}

TEST(TumorBulk, DistantBlobsStaySeparate) {
  BinaryMask m(2600, 300, 1, kRes);
  fill_rect(m, 50, 100, 150, 200);
  fill_rect(m, 2400, 100, 2500, 200);  // 2250 px = 1125 um apart
  const auto bulk = tumor_bulk_region(m, kRes);
  EXPECT_EQ(connected_components(bulk.mask).components.size(), 2u);
}

TEST(TumorBulk, SmallBlobsDropped) {
  BinaryMask m(400, 400, 1, kRes);
  fill_rect(m, 10, 10, 30, 30);  // 400 px < 500
  const auto bulk = tumor_bulk_region(m, kRes);
  EXPECT_TRUE(bulk.fallback);
  EXPECT_EQ(count_foreground(bulk.mask), 0u);
}

TEST(TumorBulk, KeptTrianglesRespectEdgeLimit) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pos(0, 1700);
  BinaryMask m(1800, 1800, 1, kRes);
  for (int k = 0; k < 12; ++k) {
    const int x = pos(rng);
    const int y = pos(rng);
    fill_rect(m, x, y, std::min(x + 60, 1800), std::min(y + 60, 1800));
  }
  BulkParams p;
  p.max_edge_um = 300.0;
  const auto bulk = tumor_bulk_region(m, kRes, p);
  const double limit_px = p.max_edge_um / kRes.mpp_x;
  for (const auto& t : bulk.triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto& a = t[static_cast<std::size_t>(k)];
      const auto& b = t[static_cast<std::size_t>((k + 1) % 3)];
      EXPECT_LE(std::hypot(a.x - b.x, a.y - b.y), limit_px + 1e-9);
    }
  }
  BinaryMask raster(1800, 1800, 1, kRes);
  rasterize_triangles(raster, bulk.triangles);
  EXPECT_TRUE(subset(raster, bulk.mask));
}

TEST(TumorBulk, MonotoneInMaxEdge) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> pos(0, 1100);
  BinaryMask m(1200, 1200, 1, kRes);
  for (int k = 0; k < 10; ++k) {
    const int x = pos(rng);
    const int y = pos(rng);
    fill_rect(m, x, y, std::min(x + 50, 1200), std::min(y + 50, 1200));
  }
  BinaryMask previous(1200, 1200, 1, kRes);
  for (const double edge : {50.0, 150.0, 300.0, 600.0, 1000.0}) {
    BulkParams p;
    p.max_edge_um = edge;
    const auto bulk = tumor_bulk_region(m, kRes, p);
    EXPECT_TRUE(subset(previous, bulk.mask)) << "max_edge_um " << edge;
    previous = bulk.mask;
  }
}

TEST(TumorBulk, InvalidParams) {
  const BinaryMask m(10, 10, 1, kRes);
  BulkParams p;
  p.sample_step_px = 0;
  EXPECT_THROW(tumor_bulk_region(m, kRes, p), ConfigError);
  p = {};
  p.max_edge_um = 0.0;
  EXPECT_THROW(tumor_bulk_region(m, kRes, p), ConfigError);
}

TEST(Rasterize, PixelCentresInclusive) {
  BinaryMask m(10, 10);
  rasterize_triangles(m, {{Point2{0, 0}, Point2{4, 0}, Point2{0, 4}}});
  EXPECT_EQ(count_foreground(m), 15u);
  BinaryMask cw(10, 10);
  rasterize_triangles(cw, {{Point2{0, 0}, Point2{0, 4}, Point2{4, 0}}});
  EXPECT_EQ(cw, m);
}

TEST(Rasterize, SharedEdgeLeavesNoGap) {
  BinaryMask m(20, 20);
  rasterize_triangles(m, {{Point2{0.5, 0.5}, Point2{15.3, 0.5}, Point2{15.3, 12.7}},
                          {Point2{0.5, 0.5}, Point2{15.3, 12.7}, Point2{0.5, 12.7}}});
  for (int y = 1; y <= 12; ++y) {
    for (int x = 1; x <= 15; ++x) EXPECT_EQ(m(x, y), 1) << x << "," << y;
  }
}

}  // namespace
}  // namespace tilscore
