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

#include "sdm/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "sdm/error.hpp"

namespace sdm {

RgbImage::RgbImage(int height, int width, Rgb fill)
    : height_(height), width_(width),
      pixels_(static_cast<std::size_t>(height) * width * 3) {
  for (std::size_t k = 0; k < pixels_.size(); k += 3) {
    pixels_[k] = fill[0];
    pixels_[k + 1] = fill[1];
    pixels_[k + 2] = fill[2];
  }
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return f;
}

// Decodes into 8-bit rows with the requested channel count (1 or 3).
std::vector<std::uint8_t> read_png(const std::filesystem::path& path, int channels, int& height,
                                   int& width) {
  auto file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::ParseError, path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng init failed");
  }
  std::vector<std::uint8_t> data;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::ParseError, "corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  const bool is_gray = (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA);
  if (channels == 3 && is_gray) png_set_gray_to_rgb(png);
  if (channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != static_cast<std::size_t>(width) * channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::ParseError, "unsupported PNG layout in " + path.string());
  }
  data.resize(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r) rows[r] = data.data() + rowbytes * r;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return data;
}

void write_png(const std::filesystem::path& path, const std::uint8_t* data, int height, int width,
               int channels) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "PNG write failed for " + path.string());
  }
  png_init_io(png, file.get());
  // Fixed filter and level so identical rasters give identical bytes.
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_BASE, PNG_FILTER_TYPE_BASE);
  png_write_info(png, info);
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels;
  for (int r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(data + rowbytes * r));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbImage read_png_rgb(const std::filesystem::path& path) {
  int h = 0, w = 0;
  auto data = read_png(path, 3, h, w);
  RgbImage img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t k = (static_cast<std::size_t>(r) * w + c) * 3;
      img.set(r, c, {data[k], data[k + 1], data[k + 2]});
    }
  }
  return img;
}

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
  write_png(path, image.pixels().data(), image.height(), image.width(), 3);
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  GrayImage img;
  img.values = read_png(path, 1, img.height, img.width);
  return img;
}

void write_png_gray(const std::filesystem::path& path, const GrayImage& image) {
  if (image.values.size() != static_cast<std::size_t>(image.height) * image.width) {
    throw Error(ErrorCode::SizeMismatch, "gray image buffer does not match dimensions");
  }
  write_png(path, image.values.data(), image.height, image.width, 1);
}

}  // namespace sdm
