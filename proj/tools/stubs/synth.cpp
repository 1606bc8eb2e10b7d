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

#include "synth.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sdm::synth {

using nlohmann::json;

std::uint64_t Rng::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int Rng::uniform(int lo, int hi) {
  return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

namespace {

std::uint8_t clamp8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

Rgb base_color(ShapeKind kind, Rng& rng) {
  switch (kind) {
    case ShapeKind::Strawberry:
      return {clamp8(rng.uniform(175, 235)), clamp8(rng.uniform(10, 40)), clamp8(rng.uniform(15, 45))};
    case ShapeKind::Blueberry:
      return {clamp8(rng.uniform(20, 50)), clamp8(rng.uniform(25, 60)), clamp8(rng.uniform(165, 225))};
    case ShapeKind::Leaf:
      return {clamp8(rng.uniform(20, 50)), clamp8(rng.uniform(145, 205)), clamp8(rng.uniform(25, 55))};
  }
  return {0, 0, 0};
}

const char* kind_label(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Strawberry: return "strawberry";
    case ShapeKind::Blueberry: return "blueberry";
    case ShapeKind::Leaf: return "leaf";
  }
  return "";
}

}  // namespace

Scene make_scene(const std::string& ref, std::uint64_t seed, const SceneOptions& o) {
  Rng rng(seed);
  Scene scene;
  scene.ref = ref;
  scene.image = RgbImage(o.height, o.width);
  for (int r = 0; r < o.height; ++r) {
    for (int c = 0; c < o.width; ++c) {
      scene.image.set(r, c, {clamp8(14 + rng.uniform(0, 22)), clamp8(16 + rng.uniform(0, 22)),
                             clamp8(18 + rng.uniform(0, 22))});
    }
  }
  // Occupied cells, padded so shapes never touch.
  Bitmap occupied(o.height, o.width);
  const int n = rng.uniform(o.min_shapes, o.max_shapes);
  for (int s = 0; s < n; ++s) {
    const int k = rng.uniform(0, 9);
    const ShapeKind kind = k < 4 ? ShapeKind::Strawberry : k < 8 ? ShapeKind::Blueberry : ShapeKind::Leaf;
    for (int attempt = 0; attempt < 200; ++attempt) {
      Bitmap bm(o.height, o.width);
      if (kind == ShapeKind::Leaf) {
        const int w = rng.uniform(8, 16), h = rng.uniform(5, 9);
        if (w + 2 > o.width || h + 2 > o.height) break;
        const int x = rng.uniform(1, o.width - w - 1), y = rng.uniform(1, o.height - h - 1);
        for (int r = y; r < y + h; ++r)
          for (int c = x; c < x + w; ++c) bm.set(r, c);
      } else {
        const double rad = rng.uniform(50, 100) / 10.0;
        const int ir = static_cast<int>(rad) + 1;
        if (2 * ir + 2 > o.width || 2 * ir + 2 > o.height) break;
        const int cx = rng.uniform(ir + 1, o.width - ir - 2), cy = rng.uniform(ir + 1, o.height - ir - 2);
        for (int r = cy - ir; r <= cy + ir; ++r) {
          for (int c = cx - ir; c <= cx + ir; ++c) {
            const double dx = c - cx, dy = r - cy;
            if (dx * dx + dy * dy <= rad * rad) bm.set(r, c);
          }
        }
      }
      bool clash = false;
      for (int r = 0; r < o.height && !clash; ++r) {
        for (int c = 0; c < o.width && !clash; ++c) {
          if (!bm.at(r, c)) continue;
          for (int dr = -3; dr <= 3 && !clash; ++dr) {
            for (int dc = -3; dc <= 3; ++dc) {
              const int rr = r + dr, cc = c + dc;
              if (rr >= 0 && rr < o.height && cc >= 0 && cc < o.width && occupied.at(rr, cc)) {
                clash = true;
                break;
              }
            }
          }
        }
      }
      if (clash) continue;
      const Rgb col = base_color(kind, rng);
      for (int r = 0; r < o.height; ++r) {
        for (int c = 0; c < o.width; ++c) {
          if (!bm.at(r, c)) continue;
          occupied.set(r, c);
          scene.image.set(r, c, {clamp8(col[0] + rng.uniform(-8, 8)), clamp8(col[1] + rng.uniform(-8, 8)),
                                 clamp8(col[2] + rng.uniform(-8, 8))});
        }
      }
      scene.shapes.push_back({kind, std::move(bm)});
      break;
    }
  }
  return scene;
}

PromptSet scene_prompts() {
  return PromptSet({{"strawberry", "a red round strawberry", 0, true},
                    {"blueberry", "a blue round blueberry", 0, true},
                    {"leaf", "a green rectangular leaf", 0, false}});
}

json scenes_ground_truth(const std::vector<Scene>& scenes) {
  json images = json::array(), annotations = json::array();
  std::int64_t ann_id = 1;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& s = scenes[i];
    const auto image_id = static_cast<std::int64_t>(i + 1);
    images.push_back({{"id", image_id}, {"file_name", s.ref}, {"width", s.image.width()},
                      {"height", s.image.height()}});
    for (const auto& shape : s.shapes) {
      if (shape.kind == ShapeKind::Leaf) continue;
      const RunLength rle = encode_rle(shape.bitmap);
      const BBox b = bbox_of(shape.bitmap);
      annotations.push_back({{"id", ann_id++},
                             {"image_id", image_id},
                             {"category_id", shape.kind == ShapeKind::Strawberry ? 1 : 2},
                             {"segmentation", {{"size", {rle.height, rle.width}}, {"counts", rle.counts}}},
                             {"bbox", {b.x, b.y, b.w, b.h}},
                             {"area", shape.bitmap.count()},
                             {"iscrowd", 0}});
    }
  }
  return {{"images", std::move(images)},
          {"annotations", std::move(annotations)},
          {"categories", json::array({json{{"id", 1}, {"name", kind_label(ShapeKind::Strawberry)}},
                                      json{{"id", 2}, {"name", kind_label(ShapeKind::Blueberry)}}})}};
}

Corpus write_corpus(const std::filesystem::path& dir, int count, std::uint64_t seed,
                    const SceneOptions& options) {
  Corpus corpus;
  corpus.images_dir = dir / "images";
  corpus.ground_truth = dir / "gt.json";
  corpus.prompts = dir / "prompts.json";
  std::filesystem::create_directories(corpus.images_dir);
  std::vector<Scene> scenes;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04d.png", i);
    scenes.push_back(make_scene(name, seed * 1000003ULL + static_cast<std::uint64_t>(i), options));
    write_png_rgb(corpus.images_dir / name, scenes.back().image);
    corpus.refs.push_back(name);
  }
  std::ofstream(corpus.ground_truth) << scenes_ground_truth(scenes).dump() << '\n';
  save_prompts(scene_prompts(), corpus.prompts);
  return corpus;
}

std::vector<Bitmap> threshold_components(const RgbImage& image,
                                         const std::vector<std::pair<double, double>>& points) {
  const int h = image.height(), w = image.width();
  std::vector<int> label(static_cast<std::size_t>(h) * w, -1);
  auto bright = [&](int r, int c) {
    const Rgb p = image.at(r, c);
    return std::max({p[0], p[1], p[2]}) > kForegroundThreshold;
  };
  std::vector<Bitmap> out;
  std::vector<std::pair<int, int>> stack;
  for (const auto& [x, y] : points) {
    const int c = std::clamp(static_cast<int>(x), 0, w - 1);
    const int r = std::clamp(static_cast<int>(y), 0, h - 1);
    if (!bright(r, c) || label[static_cast<std::size_t>(r) * w + c] >= 0) continue;
    const int id = static_cast<int>(out.size());
    Bitmap bm(h, w);
    stack.push_back({r, c});
    label[static_cast<std::size_t>(r) * w + c] = id;
    while (!stack.empty()) {
      const auto [pr, pc] = stack.back();
      stack.pop_back();
      bm.set(pr, pc);
      const int nbr[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      for (const auto& d : nbr) {
        const int rr = pr + d[0], cc = pc + d[1];
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        auto& l = label[static_cast<std::size_t>(rr) * w + cc];
        if (l >= 0 || !bright(rr, cc)) continue;
        l = id;
        stack.push_back({rr, cc});
      }
    }
    out.push_back(std::move(bm));
  }
  return out;
}

Bitmap erode(const Bitmap& bitmap) {
  Bitmap out(bitmap.height(), bitmap.width());
  for (int r = 1; r + 1 < bitmap.height(); ++r) {
    for (int c = 1; c + 1 < bitmap.width(); ++c) {
      if (bitmap.at(r, c) && bitmap.at(r - 1, c) && bitmap.at(r + 1, c) && bitmap.at(r, c - 1) &&
          bitmap.at(r, c + 1)) {
        out.set(r, c);
      }
    }
  }
  return out;
}

std::vector<float> color_features(const RgbImage& crop) {
  double frac[4] = {0, 0, 0, 0};
  double mean[3] = {0, 0, 0};
  std::size_t n = 0;
  for (int r = 0; r < crop.height(); ++r) {
    for (int c = 0; c < crop.width(); ++c) {
      const Rgb p = crop.at(r, c);
      if (p[0] == 128 && p[1] == 128 && p[2] == 128) continue;
      ++n;
      const int hi = std::max({p[0], p[1], p[2]}), lo = std::min({p[0], p[1], p[2]});
      if (hi - lo < 30) {
        frac[3] += 1;
      } else {
        frac[p[0] == hi ? 0 : p[1] == hi ? 1 : 2] += 1;
      }
      for (int k = 0; k < 3; ++k) mean[k] += p[k] / 255.0;
    }
  }
  std::vector<float> f(kFeatureDim, 0.0f);
  if (n > 0) {
    for (int k = 0; k < 4; ++k) f[k] = static_cast<float>(frac[k] / n);
    for (int k = 0; k < 3; ++k) f[4 + k] = static_cast<float>(mean[k] / n);
  }
  f[7] = 0.1f;
  return f;
}

std::vector<float> text_features(const std::string& text) {
  std::istringstream words(text);
  std::string word;
  while (words >> word) {
    std::string w;
    for (char ch : word) {
      if (std::isalpha(static_cast<unsigned char>(ch))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (w == "red") return {1, 0, 0, 0, 1, 0, 0, 0};
    if (w == "green") return {0, 1, 0, 0, 0, 1, 0, 0};
    if (w == "blue") return {0, 0, 1, 0, 0, 0, 1, 0};
  }
  return {0, 0, 0, 1, 0.33f, 0.33f, 0.33f, 0.1f};
}

}  // namespace sdm::synth
