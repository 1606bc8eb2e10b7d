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

#include "sdm/mask.hpp"

#include <algorithm>
#include <numeric>

#include "sdm/error.hpp"

namespace sdm {

Bitmap::Bitmap(int height, int width)
    : height_(height), width_(width),
      data_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0) {
  if (height < 0 || width < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative bitmap dimensions");
  }
}

Bitmap::Bitmap(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 0 || width < 0 ||
      data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw Error(ErrorCode::InvalidArgument, "bitmap data does not match dimensions");
  }
  for (auto& v : data_) v = v ? 1 : 0;
}

std::int64_t Bitmap::count() const noexcept {
  std::int64_t n = 0;
  for (auto v : data_) n += v;
  return n;
}

RunLength encode_rle(const Bitmap& bitmap) {
  RunLength rle{bitmap.height(), bitmap.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int c = 0; c < bitmap.width(); ++c) {
    for (int r = 0; r < bitmap.height(); ++r) {
      const std::uint8_t v = bitmap.at(r, c) ? 1 : 0;
      if (v != current) {
        rle.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

Bitmap decode_rle(const RunLength& rle) {
  if (rle.height < 0 || rle.width < 0) {
    throw Error(ErrorCode::MalformedRle, "negative size");
  }
  const std::uint64_t total = static_cast<std::uint64_t>(rle.height) * rle.width;
  const std::uint64_t sum =
      std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (sum != total) {
    throw Error(ErrorCode::MalformedRle, "counts sum " + std::to_string(sum) + " != " +
                                             std::to_string(rle.height) + "x" +
                                             std::to_string(rle.width));
  }
  Bitmap out(rle.height, rle.width);
  std::uint64_t pos = 0;
  bool value = false;
  for (auto run : rle.counts) {
    if (value) {
      for (std::uint64_t k = pos; k < pos + run; ++k) {
        out.set(static_cast<int>(k % rle.height), static_cast<int>(k / rle.height));
      }
    }
    pos += run;
    value = !value;
  }
  return out;
}

BBox bbox_of(const Bitmap& bitmap) {
  int min_r = bitmap.height(), max_r = -1, min_c = bitmap.width(), max_c = -1;
  for (int r = 0; r < bitmap.height(); ++r) {
    const auto row = bitmap.row(r);
    const auto first = std::find(row.begin(), row.end(), std::uint8_t{1});
    if (first == row.end()) continue;
    const auto last = std::find(row.rbegin(), row.rend(), std::uint8_t{1});
    min_r = std::min(min_r, r);
    max_r = r;
    min_c = std::min(min_c, static_cast<int>(first - row.begin()));
    max_c = std::max(max_c, static_cast<int>(row.rend() - last) - 1);
  }
  if (max_r < 0) return {};
  return {min_c, min_r, max_c - min_c + 1, max_r - min_r + 1};
}

Mask::Mask(std::string id, Bitmap bitmap, std::optional<double> stability_score,
           std::optional<double> predicted_iou)
    : id_(std::move(id)),
      bitmap_(std::move(bitmap)),
      area_(bitmap_.count()),
      bbox_(bbox_of(bitmap_)),
      stability_score_(stability_score),
      predicted_iou_(predicted_iou) {}

Mask Mask::from_rle(std::string id, const RunLength& rle, std::optional<double> stability_score,
                    std::optional<double> predicted_iou) {
  return Mask(std::move(id), decode_rle(rle), stability_score, predicted_iou);
}

std::int64_t intersection_count(const Mask& a, const Mask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::DimensionMismatch,
                a.id() + " is " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                    ", " + b.id() + " is " + std::to_string(b.height()) + "x" +
                    std::to_string(b.width()));
  }
  const BBox& ba = a.bbox();
  const BBox& bb = b.bbox();
  if (ba.empty() || bb.empty()) return 0;
  const int x0 = std::max(ba.x, bb.x), x1 = std::min(ba.x + ba.w, bb.x + bb.w);
  const int y0 = std::max(ba.y, bb.y), y1 = std::min(ba.y + ba.h, bb.y + bb.h);
  if (x0 >= x1 || y0 >= y1) return 0;
  std::int64_t n = 0;
  for (int r = y0; r < y1; ++r) {
    const auto ra = a.bitmap().row(r);
    const auto rb = b.bitmap().row(r);
    for (int c = x0; c < x1; ++c) n += ra[c] & rb[c];
  }
  return n;
}

OverlapStats overlap_stats(const Mask& a, const Mask& b) {
  OverlapStats s;
  s.intersection = intersection_count(a, b);
  s.union_ = a.area() + b.area() - s.intersection;
  s.iou = s.union_ > 0 ? static_cast<double>(s.intersection) / static_cast<double>(s.union_) : 0.0;
  const std::int64_t smaller = std::min(a.area(), b.area());
  s.smaller_ratio =
      smaller > 0 ? static_cast<double>(s.intersection) / static_cast<double>(smaller) : 0.0;
  return s;
}

}  // namespace sdm
