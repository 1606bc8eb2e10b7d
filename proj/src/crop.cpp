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

#include "sdm/crop.hpp"

#include <algorithm>
#include <cmath>

#include "sdm/error.hpp"

namespace sdm {

std::string_view crop_mode_name(CropMode mode) noexcept {
  return mode == CropMode::MaskedBBox ? "masked-bbox" : "bbox";
}

CropMode parse_crop_mode(std::string_view name) {
  if (name == "masked-bbox") return CropMode::MaskedBBox;
  if (name == "bbox") return CropMode::BBox;
  throw Error(ErrorCode::ConfigError, "unknown crop mode '" + std::string(name) + "'");
}

SegmentCrop crop_for_embedding(const RgbImage& image, const Mask& mask, CropMode mode,
                               int embed_resolution) {
  if (mask.height() != image.height() || mask.width() != image.width()) {
    throw Error(ErrorCode::DimensionMismatch, "mask " + mask.id() + " does not match image size");
  }
  if (mask.area() == 0) throw Error(ErrorCode::EmptyMask, "mask " + mask.id() + " is empty");
  if (embed_resolution < 1) throw Error(ErrorCode::InvalidArgument, "embed_resolution < 1");

  const BBox b = mask.bbox();
  const bool masked = mode == CropMode::MaskedBBox;
  auto source = [&](int r, int c) -> Rgb {
    if (masked && !mask.bitmap().at(b.y + r, b.x + c)) return kMidGray;
    return image.at(b.y + r, b.x + c);
  };

  const int side = embed_resolution;
  const double scale = static_cast<double>(side) / std::max(b.w, b.h);
  const int nw = std::clamp(static_cast<int>(std::lround(b.w * scale)), 1, side);
  const int nh = std::clamp(static_cast<int>(std::lround(b.h * scale)), 1, side);
  const int ox = (side - nw) / 2;
  const int oy = (side - nh) / 2;
  const double fx = static_cast<double>(b.w) / nw;
  const double fy = static_cast<double>(b.h) / nh;

  RgbImage out(side, side, kMidGray);
  for (int y = 0; y < nh; ++y) {
    const double sy = std::clamp((y + 0.5) * fy - 0.5, 0.0, b.h - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, b.h - 1);
    const double ty = sy - y0;
    for (int x = 0; x < nw; ++x) {
      const double sx = std::clamp((x + 0.5) * fx - 0.5, 0.0, b.w - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, b.w - 1);
      const double tx = sx - x0;
      const Rgb p00 = source(y0, x0), p01 = source(y0, x1);
      const Rgb p10 = source(y1, x0), p11 = source(y1, x1);
      Rgb px;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = p00[ch] + (p01[ch] - p00[ch]) * tx;
        const double bottom = p10[ch] + (p11[ch] - p10[ch]) * tx;
        px[ch] = static_cast<std::uint8_t>(std::lround(top + (bottom - top) * ty));
      }
      out.set(oy + y, ox + x, px);
    }
  }
  return {mask.id(), std::move(out), mode, b};
}

}  // namespace sdm
