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

#include "sdm/crop.hpp"
#include "sdm/error.hpp"
#include "support.hpp"

namespace sdm {
namespace {

TEST(Crop, MaskedModeGraysOutsidePixels) {
  RgbImage img(3, 3, {10, 20, 30});
  Bitmap b(3, 3);
  b.set(0, 0);
  b.set(0, 1);
  b.set(1, 0);
  const Mask m("m", b);
  const auto masked = crop_for_embedding(img, m, CropMode::MaskedBBox, 2);
  EXPECT_EQ(masked.pixels.height(), 2);
  EXPECT_EQ(masked.pixels.at(0, 0), (Rgb{10, 20, 30}));
  EXPECT_EQ(masked.pixels.at(1, 1), kMidGray);
  EXPECT_EQ(masked.source_bbox, (BBox{0, 0, 2, 2}));
  const auto boxed = crop_for_embedding(img, m, CropMode::BBox, 2);
  EXPECT_EQ(boxed.pixels.at(1, 1), (Rgb{10, 20, 30}));
}

TEST(Crop, LetterboxPreservesAspect) {
  RgbImage img(6, 6, {200, 100, 50});
  const Mask m("m", testing::rect_bitmap(6, 6, 1, 2, 4, 2));
  const auto crop = crop_for_embedding(img, m, CropMode::MaskedBBox, 4);
  ASSERT_EQ(crop.pixels.width(), 4);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(crop.pixels.at(0, c), kMidGray);
    EXPECT_EQ(crop.pixels.at(1, c), (Rgb{200, 100, 50}));
    EXPECT_EQ(crop.pixels.at(2, c), (Rgb{200, 100, 50}));
    EXPECT_EQ(crop.pixels.at(3, c), kMidGray);
  }
}

TEST(Crop, BilinearHalfPixelSampling) {
  RgbImage img(1, 2);
  img.set(0, 0, {0, 0, 0});
  img.set(0, 1, {200, 0, 0});
  const Mask m("m", testing::rect_bitmap(1, 2, 0, 0, 2, 1));
  const auto crop = crop_for_embedding(img, m, CropMode::MaskedBBox, 4);
  // 2x1 box scaled to 4x2 at rows 1..2.
  const int expect[4] = {0, 50, 150, 200};
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(crop.pixels.at(1, c)[0], expect[c]) << c;
    EXPECT_EQ(crop.pixels.at(2, c)[0], expect[c]) << c;
  }
}

TEST(Crop, Errors) {
  RgbImage img(4, 4);
  EXPECT_THROW(crop_for_embedding(img, Mask("e", Bitmap(4, 4))), Error);
  EXPECT_THROW(crop_for_embedding(img, Mask("d", testing::rect_bitmap(3, 4, 0, 0, 1, 1))), Error);
  EXPECT_EQ(parse_crop_mode("bbox"), CropMode::BBox);
  EXPECT_EQ(crop_mode_name(CropMode::MaskedBBox), "masked-bbox");
  EXPECT_THROW(parse_crop_mode("square"), Error);
}

TEST(Crop, AlwaysSquareAtResolution) {
  synth::Rng rng(3);
  RgbImage img(20, 30, {1, 2, 3});
  for (int k = 0; k < 50; ++k) {
    const int w = rng.uniform(1, 30), h = rng.uniform(1, 20);
    const Mask m("m", testing::rect_bitmap(20, 30, rng.uniform(0, 30 - w), rng.uniform(0, 20 - h), w, h));
    const int res = rng.uniform(1, 40);
    const auto crop = crop_for_embedding(img, m, CropMode::MaskedBBox, res);
    EXPECT_EQ(crop.pixels.width(), res);
    EXPECT_EQ(crop.pixels.height(), res);
  }
}

}  // namespace
}  // namespace sdm
