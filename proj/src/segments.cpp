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

#include "sdm/segments.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include "sdm/error.hpp"
#include "sdm/process.hpp"

namespace sdm {

using nlohmann::json;

void GridPromptSpec::validate() const {
  if (points_per_side < 1) {
    throw Error(ErrorCode::InvalidArgument, "points_per_side must be >= 1");
  }
  if (multimask_outputs != 1 && multimask_outputs != 3) {
    throw Error(ErrorCode::InvalidArgument, "multimask_outputs must be 1 or 3");
  }
}

std::vector<GridPoint> grid_points(const GridPromptSpec& spec, int width, int height) {
  spec.validate();
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  }
  const int n = spec.points_per_side;
  std::vector<GridPoint> points;
  points.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      points.push_back({(i + 0.5) * width / n, (j + 0.5) * height / n});
    }
  }
  return points;
}

json segments_to_json(const SegmentSet& set) {
  json segs = json::array();
  for (const auto& m : set.segments) {
    const RunLength rle = m.rle();
    const BBox& b = m.bbox();
    segs.push_back({
        {"id", m.id()},
        {"rle", {{"size", {rle.height, rle.width}}, {"counts", rle.counts}}},
        {"area", m.area()},
        {"bbox", {b.x, b.y, b.w, b.h}},
        {"stability_score", m.stability_score() ? json(*m.stability_score()) : json(nullptr)},
        {"predicted_iou", m.predicted_iou() ? json(*m.predicted_iou()) : json(nullptr)},
    });
  }
  return {{"image", set.image_ref},
          {"width", set.width},
          {"height", set.height},
          {"segments", std::move(segs)}};
}

namespace {

[[noreturn]] void violation(const std::string& id, const std::string& what) {
  throw Error(ErrorCode::InvariantViolation, "segment '" + id + "': " + what);
}

double unit_interval(const json& v, const std::string& id, const char* field) {
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) {
    violation(id, std::string(field) + " " + std::to_string(x) + " outside [0,1]");
  }
  return x;
}

}  // namespace

SegmentSet segments_from_json(const json& doc) {
  SegmentSet set;
  try {
    set.image_ref = doc.at("image").get<std::string>();
    set.width = doc.at("width").get<int>();
    set.height = doc.at("height").get<int>();
    if (set.width <= 0 || set.height <= 0) {
      throw Error(ErrorCode::InvariantViolation, "image size must be positive");
    }
    const auto& segs = doc.at("segments");
    if (!segs.is_array()) throw Error(ErrorCode::ParseError, "'segments' must be an array");
    set.segments.reserve(segs.size());
    for (const auto& s : segs) {
      const std::string id = s.at("id").get<std::string>();
      RunLength rle;
      const auto& size = s.at("rle").at("size");
      if (!size.is_array() || size.size() != 2) violation(id, "rle.size must be [h, w]");
      rle.height = size[0].get<int>();
      rle.width = size[1].get<int>();
      if (rle.height != set.height || rle.width != set.width) {
        violation(id, "rle size " + std::to_string(rle.height) + "x" + std::to_string(rle.width) +
                          " differs from image " + std::to_string(set.height) + "x" +
                          std::to_string(set.width));
      }
      for (const auto& c : s.at("rle").at("counts")) {
        const auto v = c.get<std::int64_t>();
        if (v < 0) violation(id, "negative run length");
        rle.counts.push_back(static_cast<std::uint32_t>(v));
      }
      const std::uint64_t sum =
          std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
      if (sum != static_cast<std::uint64_t>(rle.height) * rle.width) {
        violation(id, "rle counts sum " + std::to_string(sum) + " != " +
                          std::to_string(static_cast<std::uint64_t>(rle.height) * rle.width));
      }
      std::optional<double> stability;
      if (s.contains("stability_score") && !s["stability_score"].is_null()) {
        stability = unit_interval(s["stability_score"], id, "stability_score");
      }
      std::optional<double> piou;
      if (s.contains("predicted_iou") && !s["predicted_iou"].is_null()) {
        piou = unit_interval(s["predicted_iou"], id, "predicted_iou");
      }
      Mask mask = Mask::from_rle(id, rle, stability, piou);

      if (s.contains("area") && s["area"].get<std::int64_t>() != mask.area()) {
        violation(id, "area " + std::to_string(s["area"].get<std::int64_t>()) +
                          " != decoded pixel count " + std::to_string(mask.area()));
      }
      if (s.contains("bbox")) {
        const auto& b = s["bbox"];
        if (!b.is_array() || b.size() != 4) violation(id, "bbox must be [x, y, w, h]");
        const double x = b[0].get<double>(), y = b[1].get<double>();
        const double w = b[2].get<double>(), h = b[3].get<double>();
        if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > set.width || y + h > set.height) {
          violation(id, "bbox out of image range");
        }
      }
      set.segments.push_back(std::move(mask));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return set;
}

SegmentSet load_segments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  try {
    return segments_from_json(doc);
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.detail());
  }
}

void save_segments(const SegmentSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << segments_to_json(set).dump() << '\n';
}

json segmenter_request(const std::filesystem::path& image_path, int width, int height,
                       const GridPromptSpec& spec) {
  json pts = json::array();
  for (const auto& p : grid_points(spec, width, height)) pts.push_back({p.x, p.y});
  return {{"image", image_path.string()},
          {"width", width},
          {"height", height},
          {"points_per_side", spec.points_per_side},
          {"points", std::move(pts)},
          {"multimask_outputs", spec.multimask_outputs}};
}

SegmentSet run_segmenter_adapter(const std::string& command,
                                 const std::filesystem::path& image_path, int width, int height,
                                 const GridPromptSpec& spec,
                                 const std::filesystem::path& work_dir) {
  const auto dir = make_scratch_dir("sdm-seg", work_dir);
  const auto request = dir / "request.json";
  const auto output = dir / "segments.json";
  {
    std::ofstream out(request);
    out << segmenter_request(image_path, width, height, spec).dump() << '\n';
  }
  const auto result = run_command(command, {request.string(), output.string()});
  if (result.exit_code != 0) {
    std::filesystem::remove_all(dir);
    throw Error(ErrorCode::AdapterFailure, "segmenter exited with " +
                                               std::to_string(result.exit_code) + ": " +
                                               result.output);
  }
  if (!std::filesystem::exists(output)) {
    std::filesystem::remove_all(dir);
    throw Error(ErrorCode::AdapterFailure, "segmenter produced no output file: " + result.output);
  }
  SegmentSet set;
  try {
    set = load_segments(output);
  } catch (...) {
    std::filesystem::remove_all(dir);
    throw;
  }
  std::filesystem::remove_all(dir);
  return set;
}

}  // namespace sdm
