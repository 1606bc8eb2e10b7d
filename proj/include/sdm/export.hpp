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

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/dataset.hpp"
#include "sdm/image.hpp"
#include "sdm/nms.hpp"
#include "sdm/polygon.hpp"

namespace sdm {

struct FidelityViolation {
  std::string image_ref;
  std::string mask_id;
  double iou = 0.0;
};

inline constexpr double kPolygonFidelityIou = 0.95;

struct ExportReport {
  std::vector<std::filesystem::path> files;
  std::vector<FidelityViolation> violations;

  void merge(ExportReport other);
};

// IoU between a mask and the rasterization of its polygons.
double polygon_fidelity(const Mask& mask, std::span<const Polygon> polygons);

enum class YoloTask { Detect, Segment };

// `class cx cy w h`, normalized, six decimals. Throws UnnormalizableBox.
std::string yolo_detect_line(int class_index, const BBox& box, int width, int height);
// `class x1 y1 x2 y2 ...`, normalized, six decimals.
std::string yolo_segment_line(int class_index, const Polygon& polygon, int width, int height);

// labels/<split>/<ref>.txt per image plus data.yaml.
ExportReport export_yolo(const Dataset& dataset, YoloTask task,
                         const std::filesystem::path& out_dir, const PolygonOptions& options = {});

// COCO instances document; ids dense from 1 in image order, then instance
// order. `area` is the mask pixel count.
nlohmann::json coco_json(const Dataset& dataset, const PolygonOptions& options = {},
                         std::vector<FidelityViolation>* violations = nullptr);
ExportReport export_coco(const Dataset& dataset, const std::filesystem::path& out_path,
                         const PolygonOptions& options = {});

// 0 = background, class k = k + 1. Contested pixels go to the higher
// similarity, then the lower class index. Throws TooManyClasses above 254.
GrayImage semantic_map(const ImageRecord& image, std::size_t num_classes);
ExportReport export_voc_semantic(const Dataset& dataset, const std::filesystem::path& out_dir);

// Manual labels wholly replace pseudo labels for the listed images.
// Throws ClassListMismatch or UnknownImage.
Dataset merge_manual(const Dataset& pseudo, const Dataset& manual,
                     std::span<const std::string> image_refs);

struct AblationPair {
  Dataset with_nms;
  Dataset without_nms;
};

// Same instances with and without per-image mask NMS (stability scores
// required on every mask).
AblationPair ablation_variant(const Dataset& pre_nms, const NmsConfig& config);

}  // namespace sdm
