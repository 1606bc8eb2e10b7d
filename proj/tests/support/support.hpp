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

#include "sdm/dataset.hpp"
#include "sdm/eval.hpp"
#include "sdm/image.hpp"
#include "sdm/mask.hpp"
#include "synth.hpp"

namespace sdm::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "sdm-test");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path stub_dir();  // directory holding the stub adapter binaries
std::string stub_segmenter(bool duplicates = false);
std::string stub_embedder();

Bitmap random_bitmap(synth::Rng& rng, int height, int width, double density);
Bitmap rect_bitmap(int height, int width, int x, int y, int w, int h);

struct NmsInstanceOptions {
  int max_masks = 50;
  int height = 64;
  int width = 64;
};

// Rectangles, blobs, near-duplicates and nested copies with random (often
// tied) stability scores.
std::vector<Mask> random_nms_instance(synth::Rng& rng, const NmsInstanceOptions& options = {});

// Literal transcription of the published Mask NMS pseudocode over dense
// pixel grids; returns the keep flags.
std::vector<bool> reference_mask_nms(const std::vector<Mask>& masks, double threshold);

// Independent COCO-style evaluator: greedy matching per (image, class),
// 101-point interpolated precision as the maximum precision at recall >= r.
struct ReferenceMetrics {
  double map50 = 0.0;
  double map50_95 = 0.0;
  double mar50_95 = 0.0;
};
ReferenceMetrics reference_coco_eval(const EvalDataset& gt, const EvalDataset& dets, GeometryKind kind,
                                     int max_dets = 100);

struct RandomScene {
  EvalDataset gt;
  EvalDataset dets;
};
// <= 6 ground truth, <= 8 detections, <= 2 classes, with boxes and masks.
RandomScene random_eval_scene(synth::Rng& rng);

// Minimal JSON Schema check (type, required, properties, items, enum,
// minimum); returns the first violation or an empty string.
std::string schema_violation(const nlohmann::json& schema, const nlohmann::json& value,
                             const std::string& where = "$");

// Small hand-built dataset behind the checked-in format fixtures.
Dataset golden_dataset();
std::filesystem::path golden_dir();
// Set SDM_UPDATE_GOLDEN=1 to rewrite fixtures instead of comparing.
bool update_golden();

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Byte equality of two directory trees, ignoring the named files.
bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b,
               const std::vector<std::string>& ignore = {}, std::string* difference = nullptr);

}  // namespace sdm::testing
