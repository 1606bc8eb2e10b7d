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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sdm {

// Axis-aligned pixel box. The empty box is (0, 0, 0, 0).
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool empty() const noexcept { return w == 0 || h == 0; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

// Dense binary grid, row-major, one byte per pixel (0 or 1).
class Bitmap {
 public:
  Bitmap() = default;
  Bitmap(int height, int width);
  Bitmap(int height, int width, std::vector<std::uint8_t> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  bool at(int row, int col) const noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(int row, int col, bool value = true) noexcept {
    data_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }
  std::span<const std::uint8_t> row(int r) const noexcept {
    return {data_.data() + static_cast<std::size_t>(r) * width_,
            static_cast<std::size_t>(width_)};
  }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }

  std::int64_t count() const noexcept;

  friend bool operator==(const Bitmap&, const Bitmap&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

// Uncompressed COCO-style RLE: column-major, alternating runs, first run is
// background (possibly zero).
struct RunLength {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const RunLength&, const RunLength&) = default;
};

RunLength encode_rle(const Bitmap& bitmap);

// Throws MalformedRle if the counts do not sum to height * width.
Bitmap decode_rle(const RunLength& rle);

BBox bbox_of(const Bitmap& bitmap);

// One candidate instance region. Immutable once built; area and bbox are
// always derived from the bitmap.
class Mask {
 public:
  Mask() = default;
  Mask(std::string id, Bitmap bitmap, std::optional<double> stability_score = std::nullopt,
       std::optional<double> predicted_iou = std::nullopt);

  static Mask from_rle(std::string id, const RunLength& rle,
                       std::optional<double> stability_score = std::nullopt,
                       std::optional<double> predicted_iou = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  int height() const noexcept { return bitmap_.height(); }
  int width() const noexcept { return bitmap_.width(); }
  const Bitmap& bitmap() const noexcept { return bitmap_; }
  std::int64_t area() const noexcept { return area_; }
  const BBox& bbox() const noexcept { return bbox_; }
  const std::optional<double>& stability_score() const noexcept { return stability_score_; }
  const std::optional<double>& predicted_iou() const noexcept { return predicted_iou_; }

  RunLength rle() const { return encode_rle(bitmap_); }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::string id_;
  Bitmap bitmap_;
  std::int64_t area_ = 0;
  BBox bbox_;
  std::optional<double> stability_score_;
  std::optional<double> predicted_iou_;
};

struct OverlapStats {
  std::int64_t intersection = 0;
  std::int64_t union_ = 0;
  double iou = 0.0;
  double smaller_ratio = 0.0;
};

// Throws DimensionMismatch when the grids differ.
OverlapStats overlap_stats(const Mask& a, const Mask& b);

// Intersection pixel count, restricted to the overlap of the two boxes.
std::int64_t intersection_count(const Mask& a, const Mask& b);

}  // namespace sdm
