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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace sdm {

using Rgb = std::array<std::uint8_t, 3>;

// Interleaved 8-bit RGB raster, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width, Rgb fill = {0, 0, 0});

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool empty() const noexcept { return pixels_.empty(); }

  Rgb at(int row, int col) const noexcept {
    const std::size_t k = (static_cast<std::size_t>(row) * width_ + col) * 3;
    return {pixels_[k], pixels_[k + 1], pixels_[k + 2]};
  }
  void set(int row, int col, Rgb value) noexcept {
    const std::size_t k = (static_cast<std::size_t>(row) * width_ + col) * 3;
    pixels_[k] = value[0];
    pixels_[k + 1] = value[1];
    pixels_[k + 2] = value[2];
  }
  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// PNG decode to RGB; gray, palette, alpha and 16-bit inputs are converted.
RgbImage read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);

// Single-channel 8-bit PNG, row-major values.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;
};

GrayImage read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const GrayImage& image);

}  // namespace sdm
