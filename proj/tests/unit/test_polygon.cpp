// Copyright 2026 The SDM Engine Authors
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

#include "sdm/error.hpp"
#include "sdm/export.hpp"
#include "sdm/polygon.hpp"
#include "support.hpp"

namespace sdm {
namespace {

TEST(Polygon, RectangleIsFourCorners) {
  const Mask m("r", testing::rect_bitmap(6, 8, 2, 1, 4, 3));
  const auto polys = mask_to_polygons(m);
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].size(), 4u);
  for (const auto& p : polys[0]) {
    EXPECT_TRUE(p.x == 2 || p.x == 6);
    EXPECT_TRUE(p.y == 1 || p.y == 4);
  }
  EXPECT_EQ(rasterize_polygons(polys, 6, 8), m.bitmap());
}

TEST(Polygon, SinglePixelAndMinimumArea) {
  const Mask px("p", testing::rect_bitmap(3, 3, 1, 1, 1, 1));
  const auto polys = mask_to_polygons(px, {0.5, 0});
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].size(), 4u);
  EXPECT_EQ(rasterize_polygons(polys, 3, 3), px.bitmap());
  EXPECT_TRUE(mask_to_polygons(px).empty());  // below the default 4-pixel floor
  EXPECT_THROW(mask_to_polygons(Mask("e", Bitmap(3, 3))), Error);
}

TEST(Polygon, LShapeKeepsSixVertices) {
  Bitmap l(6, 6);
  for (int r = 1; r < 5; ++r) l.set(r, 1);
  for (int r = 1; r < 5; ++r) l.set(r, 2);
  for (int c = 1; c < 5; ++c) l.set(4, c);
  const Mask m("l", l);
  const auto polys = mask_to_polygons(m);
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].size(), 6u);
  EXPECT_GE(polygon_fidelity(m, polys), 0.95);
}

TEST(Polygon, HolesAreFilledDiagonalsJoin) {
  Bitmap ring = testing::rect_bitmap(7, 7, 1, 1, 5, 5);
  ring.set(3, 3, false);
  const auto polys = mask_to_polygons(Mask("ring", ring));
  ASSERT_EQ(polys.size(), 1u);
  EXPECT_EQ(polys[0].size(), 4u);

  Bitmap diag(6, 6);
  for (int k = 0; k < 2; ++k)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) diag.set(k * 2 + r, k * 2 + c);
  EXPECT_EQ(mask_to_polygons(Mask("d", diag)).size(), 1u);

  Bitmap apart = testing::rect_bitmap(6, 8, 0, 0, 2, 2);
  for (int r = 3; r < 6; ++r) apart.set(r, 6);
  for (int r = 3; r < 6; ++r) apart.set(r, 7);
  EXPECT_EQ(mask_to_polygons(Mask("two", apart)).size(), 2u);
}

TEST(Polygon, SimplifyClosedNeverBelowTriangle) {
  const Polygon square{{0, 0}, {1, 0}, {2, 0}, {2, 2}, {0, 2}};
  EXPECT_EQ(simplify_closed(square, 0.5).size(), 4u);
  EXPECT_GE(simplify_closed({{0, 0}, {0.1, 0}, {0.2, 0.01}}, 5.0).size(), 3u);
}

TEST(Polygon, FidelityOnRandomBlobs) {
  synth::Rng rng(8);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Union of a few rectangles, typically one compact component.
    Bitmap b(24, 24);
    for (int k = rng.uniform(1, 4); k > 0; --k) {
      const int w = rng.uniform(3, 10), h = rng.uniform(3, 10);
      const int x = rng.uniform(0, 24 - w), y = rng.uniform(0, 24 - h);
      for (int r = y; r < y + h; ++r)
        for (int c = x; c < x + w; ++c) b.set(r, c);
    }
    const Mask m("m", b);
    const auto polys = mask_to_polygons(m);
    ASSERT_GE(polygon_fidelity(m, polys), 0.95) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(Rasterize, PixelCentresEvenOdd) {
  const Polygon tri{{0, 0}, {4, 0}, {0, 4}};
  const Bitmap b = rasterize_polygons(std::vector<Polygon>{tri}, 4, 4);
  EXPECT_TRUE(b.at(0, 0));
  EXPECT_TRUE(b.at(0, 2));
  EXPECT_FALSE(b.at(1, 3));
  EXPECT_FALSE(b.at(3, 3));
  EXPECT_TRUE(b.at(1, 1));
  EXPECT_FALSE(b.at(2, 2));
}

}  // namespace
}  // namespace sdm
