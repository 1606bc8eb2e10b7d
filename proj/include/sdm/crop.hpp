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

#pragma once

#include <string>
#include <string_view>

#include "sdm/image.hpp"
#include "sdm/mask.hpp"

namespace sdm {

enum class CropMode {
  MaskedBBox,  // pixels outside the mask become mid-gray
  BBox,
};

std::string_view crop_mode_name(CropMode mode) noexcept;
CropMode parse_crop_mode(std::string_view name);

inline constexpr Rgb kMidGray{128, 128, 128};
inline constexpr int kDefaultEmbedResolution = 224;

struct SegmentCrop {
  std::string segment_id;
  RgbImage pixels;
  CropMode mode = CropMode::MaskedBBox;
  BBox source_bbox;
};

// Tight-bbox crop, letterboxed into a square raster of side `embed_resolution`
// with bilinear resampling and mid-gray padding. Throws EmptyMask on area 0.
SegmentCrop crop_for_embedding(const RgbImage& image, const Mask& mask,
                               CropMode mode = CropMode::MaskedBBox,
                               int embed_resolution = kDefaultEmbedResolution);

}  // namespace sdm
