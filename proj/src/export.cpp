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

#include "sdm/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "sdm/error.hpp"

namespace sdm {

using nlohmann::json;

void ExportReport::merge(ExportReport other) {
  files.insert(files.end(), other.files.begin(), other.files.end());
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
}

double polygon_fidelity(const Mask& mask, std::span<const Polygon> polygons) {
  const Mask raster(mask.id(), rasterize_polygons(polygons, mask.height(), mask.width()));
  const auto s = overlap_stats(mask, raster);
  return s.union_ == 0 ? 1.0 : s.iou;
}

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void check_size(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::UnnormalizableBox, "image size " + std::to_string(width) + "x" +
                                                  std::to_string(height) + " cannot normalize");
  }
}

std::filesystem::path with_extension(const std::string& ref, const char* ext) {
  std::filesystem::path p(ref);
  p.replace_extension(ext);
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

json coord(double v) {
  if (v == std::floor(v) && std::abs(v) < 9.0e15) return static_cast<std::int64_t>(v);
  return v;
}

std::vector<Polygon> polygons_for(const LabeledInstance& inst, const PolygonOptions& options,
                                  const std::string& image_ref,
                                  std::vector<FidelityViolation>* violations) {
  if (inst.mask.area() == 0) return {};
  auto polys = mask_to_polygons(inst.mask, options);
  const double iou = polygon_fidelity(inst.mask, polys);
  if (iou < kPolygonFidelityIou && violations) {
    violations->push_back({image_ref, inst.mask.id(), iou});
  }
  return polys;
}

}  // namespace

std::string yolo_detect_line(int class_index, const BBox& box, int width, int height) {
  check_size(width, height);
  const double cx = (box.x + box.w / 2.0) / width;
  const double cy = (box.y + box.h / 2.0) / height;
  return std::to_string(class_index) + " " + fixed6(cx) + " " + fixed6(cy) + " " +
         fixed6(static_cast<double>(box.w) / width) + " " +
         fixed6(static_cast<double>(box.h) / height);
}

std::string yolo_segment_line(int class_index, const Polygon& polygon, int width, int height) {
  check_size(width, height);
  std::string line = std::to_string(class_index);
  for (const auto& p : polygon) {
    line += " " + fixed6(p.x / width) + " " + fixed6(p.y / height);
  }
  return line;
}

ExportReport export_yolo(const Dataset& dataset, YoloTask task,
                         const std::filesystem::path& out_dir, const PolygonOptions& options) {
  ExportReport report;
  for (const auto& img : dataset.images) {
    std::string text;
    for (const auto& inst : img.instances) {
      if (task == YoloTask::Detect) {
        if (inst.mask.area() == 0) continue;
        text += yolo_detect_line(inst.class_index, inst.mask.bbox(), img.width, img.height) + "\n";
      } else {
        for (const auto& poly : polygons_for(inst, options, img.ref, &report.violations)) {
          text += yolo_segment_line(inst.class_index, poly, img.width, img.height) + "\n";
        }
      }
    }
    const auto path = out_dir / "labels" / dataset.manifest.splits.split_of(img.ref) /
                      with_extension(img.ref, ".txt");
    write_text(path, text);
    report.files.push_back(path);
  }
  std::string yaml = "path: .\ntrain: images/train\nval: images/val\n";
  if (!dataset.manifest.splits.test.empty()) yaml += "test: images/test\n";
  yaml += "nc: " + std::to_string(dataset.manifest.class_names.size()) + "\nnames:\n";
  for (std::size_t k = 0; k < dataset.manifest.class_names.size(); ++k) {
    yaml += "  " + std::to_string(k) + ": " + json(dataset.manifest.class_names[k]).dump() + "\n";
  }
  write_text(out_dir / "data.yaml", yaml);
  report.files.push_back(out_dir / "data.yaml");
  return report;
}

json coco_json(const Dataset& dataset, const PolygonOptions& options,
               std::vector<FidelityViolation>* violations) {
  json images = json::array();
  json annotations = json::array();
  json categories = json::array();
  for (std::size_t k = 0; k < dataset.manifest.class_names.size(); ++k) {
    categories.push_back({{"id", k + 1}, {"name", dataset.manifest.class_names[k]}});
  }
  std::int64_t ann_id = 1;
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    const auto& img = dataset.images[i];
    const auto image_id = static_cast<std::int64_t>(i + 1);
    images.push_back(
        {{"id", image_id}, {"file_name", img.ref}, {"width", img.width}, {"height", img.height}});
    for (const auto& inst : img.instances) {
      json seg = json::array();
      for (const auto& poly : polygons_for(inst, options, img.ref, violations)) {
        json flat = json::array();
        for (const auto& p : poly) {
          flat.push_back(coord(p.x));
          flat.push_back(coord(p.y));
        }
        seg.push_back(std::move(flat));
      }
      const BBox& b = inst.mask.bbox();
      json ann = {{"id", ann_id++},
                  {"image_id", image_id},
                  {"category_id", inst.class_index + 1},
                  {"segmentation", std::move(seg)},
                  {"area", inst.mask.area()},
                  {"bbox", {b.x, b.y, b.w, b.h}},
                  {"iscrowd", 0},
                  {"score", inst.similarity}};
      if (inst.mask.stability_score()) ann["stability_score"] = *inst.mask.stability_score();
      annotations.push_back(std::move(ann));
    }
  }
  return {{"images", std::move(images)},
          {"annotations", std::move(annotations)},
          {"categories", std::move(categories)}};
}

ExportReport export_coco(const Dataset& dataset, const std::filesystem::path& out_path,
                         const PolygonOptions& options) {
  ExportReport report;
  const json doc = coco_json(dataset, options, &report.violations);
  write_text(out_path, doc.dump() + "\n");
  report.files.push_back(out_path);
  return report;
}

GrayImage semantic_map(const ImageRecord& image, std::size_t num_classes) {
  if (num_classes > 254) {
    throw Error(ErrorCode::TooManyClasses,
                std::to_string(num_classes) + " classes do not fit an 8-bit index map");
  }
  GrayImage map{image.height, image.width,
                std::vector<std::uint8_t>(static_cast<std::size_t>(image.height) * image.width, 0)};
  std::vector<std::size_t> order(image.instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ia = image.instances[a];
    const auto& ib = image.instances[b];
    if (ia.similarity != ib.similarity) return ia.similarity > ib.similarity;
    return ia.class_index < ib.class_index;
  });
  std::vector<std::uint8_t> claimed(map.values.size(), 0);
  for (std::size_t k : order) {
    const auto& inst = image.instances[k];
    if (inst.mask.height() != image.height || inst.mask.width() != image.width) {
      throw Error(ErrorCode::DimensionMismatch, "instance " + inst.mask.id() + " size differs");
    }
    if (inst.class_index < 0 || static_cast<std::size_t>(inst.class_index) >= num_classes) {
      throw Error(ErrorCode::ValueOutOfRange, "instance class out of range");
    }
    const BBox& b = inst.mask.bbox();
    for (int r = b.y; r < b.y + b.h; ++r) {
      for (int c = b.x; c < b.x + b.w; ++c) {
        const std::size_t p = static_cast<std::size_t>(r) * image.width + c;
        if (!inst.mask.bitmap().at(r, c) || claimed[p]) continue;
        claimed[p] = 1;
        map.values[p] = static_cast<std::uint8_t>(inst.class_index + 1);
      }
    }
  }
  return map;
}

ExportReport export_voc_semantic(const Dataset& dataset, const std::filesystem::path& out_dir) {
  ExportReport report;
  const std::size_t k = dataset.manifest.class_names.size();
  if (k > 254) throw Error(ErrorCode::TooManyClasses, std::to_string(k) + " classes");
  for (const auto& img : dataset.images) {
    const auto path = out_dir / with_extension(img.ref, ".png");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_png_gray(path, semantic_map(img, k));
    report.files.push_back(path);
  }
  return report;
}

Dataset merge_manual(const Dataset& pseudo, const Dataset& manual,
                     std::span<const std::string> image_refs) {
  if (pseudo.manifest.class_names != manual.manifest.class_names) {
    throw Error(ErrorCode::ClassListMismatch, "pseudo and manual datasets have different classes");
  }
  std::set<std::string> listed;
  for (const auto& ref : image_refs) {
    if (!manual.find(ref)) {
      throw Error(ErrorCode::UnknownImage, "image '" + ref + "' is not in the manual dataset");
    }
    listed.insert(ref);
  }
  Dataset out = pseudo;
  for (auto& img : out.images) {
    if (!listed.count(img.ref)) continue;
    const ImageRecord* src = manual.find(img.ref);
    img.width = src->width;
    img.height = src->height;
    img.instances = src->instances;
    for (auto& inst : img.instances) inst.image_ref = img.ref;
  }
  for (const auto& ref : listed) {
    if (!pseudo.find(ref)) {
      out.images.push_back(*manual.find(ref));
      out.manifest.splits.train.push_back(ref);
    }
  }
  std::sort(out.manifest.splits.train.begin(), out.manifest.splits.train.end());
  out.manifest.provenance["manual_substitutions"] = std::vector<std::string>(listed.begin(), listed.end());
  out.manifest.provenance["lineage"] = {{"pseudo", pseudo.manifest.name},
                                        {"manual", manual.manifest.name}};
  return out;
}

AblationPair ablation_variant(const Dataset& pre_nms, const NmsConfig& config) {
  AblationPair pair{pre_nms, pre_nms};
  for (auto& img : pair.with_nms.images) {
    std::vector<Mask> masks;
    masks.reserve(img.instances.size());
    for (const auto& inst : img.instances) masks.push_back(inst.mask);
    const auto outcome = mask_nms(masks, config);
    std::vector<LabeledInstance> kept;
    for (std::size_t k : outcome.kept) kept.push_back(std::move(img.instances[k]));
    img.instances = std::move(kept);
  }
  const json nms = {{"threshold", config.threshold}, {"min_area", config.min_area}};
  pair.with_nms.manifest.name = pre_nms.manifest.name + "-nms";
  pair.with_nms.manifest.provenance["nms"] = nms;
  pair.with_nms.manifest.provenance["nms"]["enabled"] = true;
  pair.without_nms.manifest.name = pre_nms.manifest.name + "-no-nms";
  pair.without_nms.manifest.provenance["nms"] = nms;
  pair.without_nms.manifest.provenance["nms"]["enabled"] = false;
  for (auto* ds : {&pair.with_nms, &pair.without_nms}) {
    ds->manifest.provenance["ablation_of"] = pre_nms.manifest.name;
  }
  return pair;
}

}  // namespace sdm
