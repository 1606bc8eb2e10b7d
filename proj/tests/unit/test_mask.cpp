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
#include "sdm/mask.hpp"
#include "support.hpp"

namespace sdm {
namespace {

Bitmap from_rows(const std::vector<std::string>& rows) {
  Bitmap b(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int r = 0; r < b.height(); ++r)
    for (int c = 0; c < b.width(); ++c) b.set(r, c, rows[r][c] == '#');
  return b;
}

TEST(Rle, ColumnMajorWithLeadingBackgroundRun) {
  const Bitmap b = from_rows({".#", "##"});
  EXPECT_EQ(encode_rle(b).counts, (std::vector<std::uint32_t>{1, 3}));
  EXPECT_EQ(encode_rle(from_rows({"##", "##"})).counts, (std::vector<std::uint32_t>{0, 4}));
  EXPECT_EQ(encode_rle(from_rows({"..", ".."})).counts, (std::vector<std::uint32_t>{4}));
  EXPECT_EQ(encode_rle(from_rows({"#.", ".#"})).counts, (std::vector<std::uint32_t>{0, 1, 2, 1}));
}

TEST(Rle, RoundTripProperty) {
  synth::Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = rng.uniform(1, 24), w = rng.uniform(1, 24);
    const Bitmap b = testing::random_bitmap(rng, h, w, rng.unit());
    const RunLength rle = encode_rle(b);
    std::uint64_t sum = 0;
    for (std::size_t k = 0; k < rle.counts.size(); ++k) {
      sum += rle.counts[k];
      if (k > 0) {
        EXPECT_GT(rle.counts[k], 0u);
      }
    }
    ASSERT_EQ(sum, static_cast<std::uint64_t>(h) * w);
    ASSERT_EQ(decode_rle(rle), b) << "trial " << trial;
  }
}

TEST(Rle, RejectsCountsThatDoNotCoverTheGrid) {
  RunLength bad{2, 2, {1, 2}};
  try {
    decode_rle(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRle);
  }
  EXPECT_THROW(decode_rle({2, 2, {3, 3}}), Error);
}

TEST(Geometry, OverlapHandCase) {
  const Mask a("a", testing::rect_bitmap(4, 4, 0, 0, 2, 2));
  const Mask b("b", testing::rect_bitmap(4, 4, 1, 1, 2, 2));
  const OverlapStats s = overlap_stats(a, b);
  EXPECT_EQ(s.intersection, 1);
  EXPECT_EQ(s.union_, 7);
  EXPECT_DOUBLE_EQ(s.iou, 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(s.smaller_ratio, 0.25);
}

TEST(Geometry, OverlapMatchesDenseCount) {
  synth::Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int h = rng.uniform(1, 16), w = rng.uniform(1, 16);
    const Mask a("a", testing::random_bitmap(rng, h, w, rng.unit() * 0.6));
    const Mask b("b", testing::random_bitmap(rng, h, w, rng.unit() * 0.6));
    std::int64_t inter = 0, uni = 0;
    for (std::size_t k = 0; k < a.bitmap().size(); ++k) {
      inter += a.bitmap().data()[k] & b.bitmap().data()[k];
      uni += a.bitmap().data()[k] | b.bitmap().data()[k];
    }
    const OverlapStats s = overlap_stats(a, b);
    ASSERT_EQ(s.intersection, inter);
    ASSERT_EQ(s.union_, uni);
    ASSERT_EQ(intersection_count(a, b), inter);
    ASSERT_EQ(overlap_stats(b, a).iou, s.iou);
  }
}

TEST(Geometry, DimensionMismatchThrows) {
  const Mask a("a", Bitmap(3, 3)), b("b", Bitmap(3, 4));
  EXPECT_THROW(overlap_stats(a, b), Error);
  EXPECT_THROW(intersection_count(a, b), Error);
}

TEST(Geometry, TightBoundingBox) {
  const Bitmap l = from_rows({"......", "..#...", "..#...", "..####"});
  EXPECT_EQ(bbox_of(l), (BBox{2, 1, 4, 3}));
  EXPECT_EQ(bbox_of(Bitmap(5, 5)), (BBox{0, 0, 0, 0}));
  EXPECT_TRUE(bbox_of(Bitmap(5, 5)).empty());
}

TEST(Mask, DerivesAreaAndBoxFromBitmap) {
  const Mask m = Mask::from_rle("x", encode_rle(from_rows({".#.", ".##"})), 0.7, 0.8);
  EXPECT_EQ(m.area(), 3);
  EXPECT_EQ(m.bbox(), (BBox{1, 0, 2, 2}));
  EXPECT_EQ(*m.stability_score(), 0.7);
  EXPECT_EQ(decode_rle(m.rle()), m.bitmap());
}

}  // namespace
}  // namespace sdm
