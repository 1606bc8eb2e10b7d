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
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/image.hpp"
#include "sdm/mask.hpp"
#include "sdm/prompt.hpp"

namespace sdm::synth {

enum class ShapeKind { Strawberry, Blueberry, Leaf };

struct Shape {
  ShapeKind kind = ShapeKind::Strawberry;
  Bitmap bitmap;
};

struct Scene {
  std::string ref;
  RgbImage image;
  std::vector<Shape> shapes;
};

struct SceneOptions {
  int width = 96;
  int height = 72;
  int min_shapes = 2;
  int max_shapes = 5;
};

// Small deterministic generator; identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL) {}
  std::uint64_t next();
  int uniform(int lo, int hi);  // inclusive
  double unit();                // [0, 1)

 private:
  std::uint64_t state_;
};

// Disks (red strawberries, blue blueberries) and rectangles (green leaves)
// on a dark noisy background, never touching.
Scene make_scene(const std::string& ref, std::uint64_t seed, const SceneOptions& options = {});

// Strawberry and blueberry are exported; leaf is a distractor class.
PromptSet scene_prompts();

// Ground truth instances document with uncompressed RLE segmentations.
nlohmann::json scenes_ground_truth(const std::vector<Scene>& scenes);

struct Corpus {
  std::filesystem::path images_dir;
  std::filesystem::path ground_truth;
  std::filesystem::path prompts;
  std::vector<std::string> refs;
};

// <dir>/images/scene_NNNN.png, <dir>/gt.json, <dir>/prompts.json.
Corpus write_corpus(const std::filesystem::path& dir, int count, std::uint64_t seed,
                    const SceneOptions& options = {});

// Stub model internals, shared with the adapter executables.
inline constexpr int kForegroundThreshold = 90;
inline constexpr std::uint32_t kFeatureDim = 8;

// 4-connected bright regions hit by at least one point, in first-hit order.
std::vector<Bitmap> threshold_components(const RgbImage& image,
                                         const std::vector<std::pair<double, double>>& points);
Bitmap erode(const Bitmap& bitmap);

// Dominant-channel fractions and mean color of the non-padding pixels.
std::vector<float> color_features(const RgbImage& crop);
// Hand-built vector from the first color keyword in the text.
std::vector<float> text_features(const std::string& text);

}  // namespace sdm::synth
