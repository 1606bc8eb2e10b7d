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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/dataset.hpp"
#include "sdm/image.hpp"
#include "sdm/mask.hpp"

namespace sdm {

enum class GeometryKind { Box, Mask };

std::string_view geometry_kind_name(GeometryKind kind) noexcept;

struct BoxF {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

double box_iou(const BoxF& a, const BoxF& b) noexcept;

// Ground truth or prediction; `score` is ignored for ground truth.
struct Detection {
  std::string image_ref;
  int class_index = 0;
  double score = 1.0;
  BoxF box;
  std::optional<Mask> mask;
};

double geometry_iou(const Detection& a, const Detection& b, GeometryKind kind);

struct EvalImage {
  std::string ref;
  int width = 0;
  int height = 0;
};

struct EvalDataset {
  std::vector<std::string> class_names;
  std::vector<EvalImage> images;
  std::vector<Detection> items;
};

// COCO-style greedy matching within one image and class. `dets` must be in
// non-increasing score order (UnsortedInput otherwise). Each detection takes
// the unmatched ground truth of highest IoU >= threshold; equal IoUs go to
// the later ground truth, as pycocotools does.
struct MatchResult {
  std::vector<bool> tp;
  std::vector<int> matched_gt;  // -1 when unmatched
};

MatchResult match_greedy(std::span<const Detection> gts, std::span<const Detection> dets,
                         double iou_threshold, GeometryKind kind);

// `ious` is dets x gts, row-major.
MatchResult match_greedy_ious(std::span<const double> ious, std::size_t num_dets,
                              std::size_t num_gts, double iou_threshold);

inline constexpr int kRecallPoints = 101;

// 101-point interpolated AP over detections already sorted by score:
// mean over r in {0, 0.01, ..., 1} of the best precision at recall >= r.
double average_precision(const std::vector<bool>& tp_flags, std::span<const double> scores,
                         std::size_t num_gt);

struct EvalSettings {
  GeometryKind kind = GeometryKind::Box;
  int max_dets = 100;
  std::vector<double> iou_thresholds = default_iou_thresholds();

  static std::vector<double> default_iou_thresholds();
};

struct ClassMetrics {
  std::string name;
  std::size_t num_gt = 0;
  std::size_t num_dets = 0;
  std::vector<double> ap;      // one per IoU threshold
  std::vector<double> recall;  // one per IoU threshold
};

struct EvalReport {
  GeometryKind kind = GeometryKind::Box;
  std::vector<ClassMetrics> per_class;  // classes with ground truth only
  double map50 = 0.0;
  double map50_95 = 0.0;
  double mar50_95 = 0.0;
  std::size_t gt_count = 0;
  std::size_t det_count = 0;
  std::size_t tp50 = 0;
  std::size_t fp50 = 0;
  EvalSettings settings;
};

// Throws ClassListMismatch when the class lists differ.
EvalReport coco_eval(const EvalDataset& gt, const EvalDataset& dets, const EvalSettings& settings);

// Ground truth from an instances document; predictions may also be a bare
// results list, resolved against `gt_doc` images and categories.
EvalDataset eval_dataset_from_coco(const CocoDocument& doc, GeometryKind kind,
                                   const CocoDocument* gt_doc = nullptr);
EvalDataset eval_dataset_from_dataset(const Dataset& ds, GeometryKind kind);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

struct VocOptions {
  bool include_background = false;
};

struct SemanticReport {
  std::size_t num_classes = 0;  // foreground classes; matrix is (K+1)^2
  std::vector<std::uint64_t> confusion;
  std::vector<double> class_iou;       // NaN when the class never occurs
  std::vector<double> class_accuracy;  // NaN when absent from ground truth
  double class_accuracy_mean = 0.0;
  double miou = 0.0;
  double fwiou = 0.0;
  std::uint64_t total = 0;

  std::uint64_t at(std::size_t g, std::size_t p) const { return confusion[g * (num_classes + 1) + p]; }
};

// Index maps: 0 background, k + 1 class k. Throws SizeMismatch or
// ValueOutOfRange.
SemanticReport voc_eval(std::span<const GrayImage> gt_maps, std::span<const GrayImage> pred_maps,
                        std::size_t num_classes, const VocOptions& options = {});

nlohmann::json semantic_report_to_json(const SemanticReport& report);
std::string semantic_report_table(const SemanticReport& report);

}  // namespace sdm
