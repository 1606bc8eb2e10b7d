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

#include "sdm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "sdm/digest.hpp"
#include "sdm/error.hpp"

namespace sdm {

using nlohmann::json;

std::string Splits::split_of(const std::string& ref) const {
  if (std::binary_search(val.begin(), val.end(), ref)) return "val";
  if (std::binary_search(test.begin(), test.end(), ref)) return "test";
  return "train";
}

void Splits::validate() const {
  std::set<std::string> seen;
  for (const auto* list : {&train, &val, &test}) {
    for (const auto& ref : *list) {
      if (!seen.insert(ref).second) {
        throw Error(ErrorCode::InvariantViolation, "image '" + ref + "' appears in two splits");
      }
    }
  }
}

const ImageRecord* Dataset::find(const std::string& ref) const {
  for (const auto& img : images) {
    if (img.ref == ref) return &img;
  }
  return nullptr;
}

std::size_t Dataset::instance_count() const {
  std::size_t n = 0;
  for (const auto& img : images) n += img.instances.size();
  return n;
}

Splits assign_splits(std::span<const std::string> refs, double val_fraction, double test_fraction,
                     std::uint64_t seed) {
  if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction > 1.0) {
    throw Error(ErrorCode::ConfigError, "split fractions must be non-negative and sum to <= 1");
  }
  std::vector<std::pair<std::string, std::string>> keyed;
  for (const auto& ref : refs) {
    keyed.push_back({Sha256().field(std::to_string(seed)).field(ref).hex(), ref});
  }
  std::sort(keyed.begin(), keyed.end());
  const std::size_t n = keyed.size();
  const auto n_test = std::min(n, static_cast<std::size_t>(std::llround(test_fraction * n)));
  const auto n_val = std::min(n - n_test, static_cast<std::size_t>(std::llround(val_fraction * n)));
  Splits s;
  for (std::size_t k = 0; k < n; ++k) {
    auto& list = k < n_test ? s.test : (k < n_test + n_val ? s.val : s.train);
    list.push_back(keyed[k].second);
  }
  for (auto* list : {&s.train, &s.val, &s.test}) std::sort(list->begin(), list->end());
  return s;
}

json manifest_to_json(const DatasetManifest& m) {
  return {{"name", m.name},
          {"classes", m.class_names},
          {"splits", {{"train", m.splits.train}, {"val", m.splits.val}, {"test", m.splits.test}}},
          {"formats", m.formats},
          {"provenance", m.provenance}};
}

DatasetManifest manifest_from_json(const json& doc) {
  DatasetManifest m;
  try {
    m.name = doc.value("name", std::string("sdm"));
    m.class_names = doc.at("classes").get<std::vector<std::string>>();
    if (doc.contains("splits")) {
      const auto& s = doc["splits"];
      m.splits.train = s.value("train", std::vector<std::string>{});
      m.splits.val = s.value("val", std::vector<std::string>{});
      m.splits.test = s.value("test", std::vector<std::string>{});
    }
    m.formats = doc.value("formats", std::vector<std::string>{});
    m.provenance = doc.value("provenance", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
  m.splits.validate();
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
}

namespace {

std::vector<Polygon> parse_polygons(const json& seg) {
  std::vector<Polygon> polys;
  for (const auto& flat : seg) {
    if (!flat.is_array() || flat.size() % 2 != 0) {
      throw Error(ErrorCode::ParseError, "polygon must be a flat [x1, y1, ...] list");
    }
    Polygon p;
    for (std::size_t k = 0; k < flat.size(); k += 2) {
      p.push_back({flat[k].get<double>(), flat[k + 1].get<double>()});
    }
    polys.push_back(std::move(p));
  }
  return polys;
}

CocoAnnotation parse_annotation(const json& a) {
  CocoAnnotation ann;
  ann.id = a.value("id", std::int64_t{0});
  ann.image_id = a.at("image_id").get<std::int64_t>();
  ann.category_id = a.at("category_id").get<std::int64_t>();
  if (a.value("iscrowd", 0) != 0) {
    throw Error(ErrorCode::InvalidArgument,
                "annotation " + std::to_string(ann.id) + ": iscrowd=1 is not supported");
  }
  if (a.contains("segmentation") && !a["segmentation"].is_null()) {
    const auto& seg = a["segmentation"];
    if (seg.is_array()) {
      ann.polygons = parse_polygons(seg);
    } else if (seg.is_object()) {
      if (!seg.at("counts").is_array()) {
        throw Error(ErrorCode::ParseError, "annotation " + std::to_string(ann.id) +
                                               ": compressed RLE strings are not supported");
      }
      RunLength rle;
      rle.height = seg.at("size")[0].get<int>();
      rle.width = seg.at("size")[1].get<int>();
      rle.counts = seg.at("counts").get<std::vector<std::uint32_t>>();
      ann.rle = std::move(rle);
    }
  }
  if (a.contains("bbox")) {
    const auto& b = a["bbox"];
    if (!b.is_array() || b.size() != 4) throw Error(ErrorCode::ParseError, "bbox must have 4 values");
    for (int k = 0; k < 4; ++k) ann.bbox[k] = b[k].get<double>();
  }
  ann.area = a.value("area", 0.0);
  if (a.contains("score") && !a["score"].is_null()) ann.score = a["score"].get<double>();
  if (a.contains("stability_score") && !a["stability_score"].is_null()) {
    ann.stability_score = a["stability_score"].get<double>();
  }
  return ann;
}

}  // namespace

CocoDocument parse_coco(const json& doc) {
  CocoDocument out;
  try {
    if (doc.is_array()) {
      out.results_only = true;
      for (const auto& a : doc) out.annotations.push_back(parse_annotation(a));
      return out;
    }
    for (const auto& img : doc.at("images")) {
      out.images.push_back({img.at("id").get<std::int64_t>(), img.value("file_name", std::string()),
                            img.at("width").get<int>(), img.at("height").get<int>()});
    }
    for (const auto& cat : doc.at("categories")) {
      out.categories.push_back({cat.at("id").get<std::int64_t>(), cat.value("name", std::string())});
    }
    for (const auto& a : doc.value("annotations", json::array())) {
      out.annotations.push_back(parse_annotation(a));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("COCO document: ") + e.what());
  }
  return out;
}

CocoDocument load_coco_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return parse_coco(doc);
}

Mask annotation_mask(const CocoAnnotation& ann, int height, int width) {
  const std::string id = "ann-" + std::to_string(ann.id);
  if (ann.rle) {
    if (ann.rle->height != height || ann.rle->width != width) {
      throw Error(ErrorCode::DimensionMismatch, id + ": RLE size differs from image");
    }
    return Mask::from_rle(id, *ann.rle, ann.stability_score);
  }
  return Mask(id, rasterize_polygons(ann.polygons, height, width), ann.stability_score);
}

Dataset dataset_from_coco(const CocoDocument& doc, const std::string& name) {
  if (doc.results_only) {
    throw Error(ErrorCode::InvalidArgument, "a results list carries no images or categories");
  }
  Dataset ds;
  ds.manifest.name = name;
  std::map<std::int64_t, int> class_of;
  for (const auto& cat : doc.categories) {
    class_of[cat.id] = static_cast<int>(ds.manifest.class_names.size());
    ds.manifest.class_names.push_back(cat.name);
  }
  std::map<std::int64_t, std::size_t> image_of;
  for (const auto& img : doc.images) {
    image_of[img.id] = ds.images.size();
    ds.images.push_back({img.file_name, img.width, img.height, {}});
    ds.manifest.splits.train.push_back(img.file_name);
  }
  std::sort(ds.manifest.splits.train.begin(), ds.manifest.splits.train.end());
  for (const auto& ann : doc.annotations) {
    auto img = image_of.find(ann.image_id);
    if (img == image_of.end()) {
      throw Error(ErrorCode::UnknownImage, "annotation " + std::to_string(ann.id) +
                                               " references image " + std::to_string(ann.image_id));
    }
    auto cls = class_of.find(ann.category_id);
    if (cls == class_of.end()) {
      throw Error(ErrorCode::ClassListMismatch, "annotation " + std::to_string(ann.id) +
                                                    " has unknown category " +
                                                    std::to_string(ann.category_id));
    }
    auto& rec = ds.images[img->second];
    rec.instances.push_back({annotation_mask(ann, rec.height, rec.width), cls->second,
                             ann.score.value_or(1.0), rec.ref});
  }
  return ds;
}

Dataset load_coco_dataset(const std::filesystem::path& path) {
  return dataset_from_coco(load_coco_document(path), path.stem().string());
}

}  // namespace sdm
