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

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "sdm/digest.hpp"
#include "sdm/error.hpp"
#include "sdm/pipeline.hpp"

namespace sdm {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

SourceConfig source_from(const json& j, const std::filesystem::path& base, const char* what) {
  SourceConfig s;
  if (!j.is_object()) config_error(std::string(what) + " must be an object");
  if (j.contains("dir") && !j["dir"].is_null()) s.dir = resolve(base, j["dir"].get<std::string>());
  if (j.contains("adapter") && !j["adapter"].is_null()) s.adapter = j["adapter"].get<std::string>();
  return s;
}

json source_to(const SourceConfig& s) {
  if (!s.adapter.empty()) return {{"adapter", s.adapter}};
  return {{"dir", s.dir.string()}};
}

}  // namespace

void PipelineConfig::validate() const {
  auto one_source = [](const SourceConfig& s, const char* what) {
    if (s.dir.empty() == s.adapter.empty()) {
      config_error(std::string("exactly one ") + what + " source (dir or adapter) is required");
    }
  };
  one_source(segments, "segments");
  one_source(embeddings, "embeddings");
  if (images_dir.empty()) config_error("images_dir is required");
  if (prompts.empty()) config_error("prompts is required");
  if (embed_resolution < 1) config_error("crop.embed_resolution must be >= 1");
  if (workers < 1) config_error("workers must be >= 1");
  for (const auto& f : exports.formats) {
    if (std::find(known_formats().begin(), known_formats().end(), f) == known_formats().end()) {
      config_error("unknown export format '" + f + "'");
    }
  }
  if (exports.polygons.epsilon < 0) config_error("export.epsilon must be >= 0");
  if (exports.val_fraction < 0 || exports.test_fraction < 0 ||
      exports.val_fraction + exports.test_fraction > 1.0) {
    config_error("split fractions must be non-negative and sum to <= 1");
  }
  try {
    grid.validate();
    nms.validate();
  } catch (const Error& e) {
    config_error(e.detail());
  }
}

PipelineConfig config_from_json(const json& doc, const std::filesystem::path& base) {
  PipelineConfig c;
  try {
    if (!doc.is_object()) config_error("config must be a JSON object");
    c.images_dir = resolve(base, doc.value("images_dir", std::string()));
    c.prompts = resolve(base, doc.value("prompts", std::string()));
    if (doc.contains("segments")) c.segments = source_from(doc["segments"], base, "segments");
    if (doc.contains("embeddings")) c.embeddings = source_from(doc["embeddings"], base, "embeddings");
    if (doc.contains("grid")) {
      const auto& g = doc["grid"];
      c.grid.points_per_side = g.value("points_per_side", c.grid.points_per_side);
      c.grid.multimask_outputs = g.value("multimask_outputs", c.grid.multimask_outputs);
    }
    if (doc.contains("nms")) {
      const auto& n = doc["nms"];
      c.nms_enabled = n.value("enabled", true);
      c.nms.threshold = n.value("threshold", c.nms.threshold);
      c.nms.min_area = n.value("min_area", c.nms.min_area);
      c.nms.break_on_suppress = n.value("break_on_suppress", false);
    }
    if (doc.contains("crop")) {
      const auto& cr = doc["crop"];
      c.crop_mode = parse_crop_mode(cr.value("mode", std::string("masked-bbox")));
      c.embed_resolution = cr.value("embed_resolution", c.embed_resolution);
    }
    if (doc.contains("export")) {
      const auto& e = doc["export"];
      c.exports.formats = e.value("formats", c.exports.formats);
      c.exports.out_dir = resolve(base, e.value("out_dir", std::string()));
      c.exports.name = e.value("name", c.exports.name);
      c.exports.polygons.epsilon = e.value("epsilon", c.exports.polygons.epsilon);
      c.exports.polygons.min_component_area =
          e.value("min_component_area", c.exports.polygons.min_component_area);
      c.exports.val_fraction = e.value("val_fraction", 0.0);
      c.exports.test_fraction = e.value("test_fraction", 0.0);
      c.exports.copy_images = e.value("copy_images", false);
    }
    if (doc.contains("similarity_floor") && !doc["similarity_floor"].is_null()) {
      const auto& f = doc["similarity_floor"];
      c.similarity_floor = FloorConfig{f.at("value").get<double>(), f.at("label").get<std::string>()};
    }
    c.workers = doc.value("workers", 1);
    if (doc.contains("cache_dir") && !doc["cache_dir"].is_null()) {
      c.cache_dir = resolve(base, doc["cache_dir"].get<std::string>());
    }
    c.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("gt") && !doc["gt"].is_null()) c.gt = resolve(base, doc["gt"].get<std::string>());
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  if (const char* env = std::getenv(kCacheDirEnv); env && *env) c.cache_dir = env;
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

json config_to_json(const PipelineConfig& c) {
  json doc = {
      {"images_dir", c.images_dir.string()},
      {"prompts", c.prompts.string()},
      {"segments", source_to(c.segments)},
      {"embeddings", source_to(c.embeddings)},
      {"grid", {{"points_per_side", c.grid.points_per_side},
                {"multimask_outputs", c.grid.multimask_outputs}}},
      {"nms", {{"enabled", c.nms_enabled},
               {"threshold", c.nms.threshold},
               {"min_area", c.nms.min_area},
               {"break_on_suppress", c.nms.break_on_suppress}}},
      {"crop", {{"mode", crop_mode_name(c.crop_mode)}, {"embed_resolution", c.embed_resolution}}},
      {"export", {{"formats", c.exports.formats},
                  {"out_dir", c.exports.out_dir.string()},
                  {"name", c.exports.name},
                  {"epsilon", c.exports.polygons.epsilon},
                  {"min_component_area", c.exports.polygons.min_component_area},
                  {"val_fraction", c.exports.val_fraction},
                  {"test_fraction", c.exports.test_fraction},
                  {"copy_images", c.exports.copy_images}}},
      {"similarity_floor", c.similarity_floor ? json{{"value", c.similarity_floor->value},
                                                     {"label", c.similarity_floor->label}}
                                              : json(nullptr)},
      {"workers", c.workers},
      {"cache_dir", c.cache_dir.empty() ? json(nullptr) : json(c.cache_dir.string())},
      {"seed", c.seed},
      {"gt", c.gt.empty() ? json(nullptr) : json(c.gt.string())},
  };
  return doc;
}

std::string config_digest(const PipelineConfig& c) {
  json doc = config_to_json(c);
  doc.erase("workers");
  doc.erase("cache_dir");
  doc["export"].erase("out_dir");
  return sha256_hex(doc.dump());
}

json config_schema() {
  const json source = {
      {"type", "object"},
      {"properties", {{"dir", {{"type", "string"}}}, {"adapter", {{"type", "string"}}}}},
      {"oneOf", json::array({json{{"required", {"dir"}}}, json{{"required", {"adapter"}}}})},
  };
  return {
      {"$schema", "http://json-schema.org/draft-07/schema#"},
      {"title", "sdm pipeline config"},
      {"type", "object"},
      {"required", {"images_dir", "prompts", "segments", "embeddings"}},
      {"properties",
       {
           {"images_dir", {{"type", "string"}, {"description", "directory of PNG images"}}},
           {"prompts", {{"type", "string"}, {"description", "prompt file"}}},
           {"segments", source},
           {"embeddings", source},
           {"grid", {{"type", "object"},
                     {"properties", {{"points_per_side", {{"type", "integer"}, {"minimum", 1}, {"default", 32}}},
                                     {"multimask_outputs", {{"enum", {1, 3}}, {"default", 3}}}}}}},
           {"nms", {{"type", "object"},
                    {"properties", {{"enabled", {{"type", "boolean"}, {"default", true}}},
                                    {"threshold", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 1}, {"default", 0.9}}},
                                    {"min_area", {{"type", "integer"}, {"minimum", 0}, {"default", 0}}},
                                    {"break_on_suppress", {{"type", "boolean"}, {"default", false}}}}}}},
           {"crop", {{"type", "object"},
                     {"properties", {{"mode", {{"enum", {"masked-bbox", "bbox"}}, {"default", "masked-bbox"}}},
                                     {"embed_resolution", {{"type", "integer"}, {"minimum", 1}, {"default", 224}}}}}}},
           {"export", {{"type", "object"},
                       {"properties", {{"formats", {{"type", "array"}, {"items", {{"enum", known_formats()}}}}},
                                       {"out_dir", {{"type", "string"}}},
                                       {"name", {{"type", "string"}}},
                                       {"epsilon", {{"type", "number"}, {"minimum", 0}, {"default", 0.5}}},
                                       {"min_component_area", {{"type", "integer"}, {"minimum", 0}, {"default", 4}}},
                                       {"val_fraction", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
                                       {"test_fraction", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
                                       {"copy_images", {{"type", "boolean"}}}}}}},
           {"similarity_floor", {{"type", {"object", "null"}},
                                 {"properties", {{"value", {{"type", "number"}}}, {"label", {{"type", "string"}}}}}}},
           {"workers", {{"type", "integer"}, {"minimum", 1}, {"default", 1}}},
           {"cache_dir", {{"type", {"string", "null"}}, {"description", std::string("overridden by $") + kCacheDirEnv}}},
           {"seed", {{"type", "integer"}, {"minimum", 0}}},
           {"gt", {{"type", {"string", "null"}}, {"description", "COCO ground truth enabling evaluation"}}},
       }},
  };
}

}  // namespace sdm
