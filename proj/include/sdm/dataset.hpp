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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/mask.hpp"
#include "sdm/polygon.hpp"

namespace sdm {

// A kept mask bound to a dataset class (index among exported classes).
struct LabeledInstance {
  Mask mask;
  int class_index = 0;
  double similarity = 0.0;
  std::string image_ref;
};

struct ImageRecord {
  std::string ref;
  int width = 0;
  int height = 0;
  std::vector<LabeledInstance> instances;
};

struct Splits {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  // "train", "val" or "test"; images outside every list count as train.
  std::string split_of(const std::string& ref) const;
  void validate() const;
};

struct DatasetManifest {
  std::string name = "sdm";
  std::vector<std::string> class_names;
  Splits splits;
  std::vector<std::string> formats;
  nlohmann::json provenance = nlohmann::json::object();
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<ImageRecord> images;

  const ImageRecord* find(const std::string& ref) const;
  std::size_t instance_count() const;
};

// Deterministic split by hashing (seed, ref); each list sorted by ref.
Splits assign_splits(std::span<const std::string> refs, double val_fraction, double test_fraction,
                     std::uint64_t seed);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& doc);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// COCO instances documents in their raw shape, shared by export loaders and
// the evaluator.
struct CocoImage {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct CocoCategory {
  std::int64_t id = 0;
  std::string name;
};

struct CocoAnnotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  std::vector<Polygon> polygons;
  std::optional<RunLength> rle;
  std::array<double, 4> bbox{};
  double area = 0.0;
  std::optional<double> score;
  std::optional<double> stability_score;
};

struct CocoDocument {
  std::vector<CocoImage> images;
  std::vector<CocoCategory> categories;
  std::vector<CocoAnnotation> annotations;
  // True when the file was a bare results list (predictions only).
  bool results_only = false;
};

// Rejects iscrowd=1 and compressed RLE strings.
CocoDocument parse_coco(const nlohmann::json& doc);
CocoDocument load_coco_document(const std::filesystem::path& path);

Mask annotation_mask(const CocoAnnotation& ann, int height, int width);

// Dataset view of a COCO instances file; class order follows the categories
// array. Scores become similarities (1.0 when absent).
Dataset dataset_from_coco(const CocoDocument& doc, const std::string& name = "coco");
Dataset load_coco_dataset(const std::filesystem::path& path);

}  // namespace sdm
