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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/mask.hpp"

namespace sdm {

struct GridPromptSpec {
  int points_per_side = 32;
  int multimask_outputs = 3;

  void validate() const;
};

struct GridPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

// n*n cell centres, row-major: ((i + 0.5) * W / n, (j + 0.5) * H / n).
std::vector<GridPoint> grid_points(const GridPromptSpec& spec, int width, int height);

struct SegmentSet {
  std::string image_ref;
  int width = 0;
  int height = 0;
  std::vector<Mask> segments;

  friend bool operator==(const SegmentSet&, const SegmentSet&) = default;
};

nlohmann::json segments_to_json(const SegmentSet& set);
SegmentSet segments_from_json(const nlohmann::json& doc);

// ParseError on malformed JSON or schema; InvariantViolation naming the
// segment id on RLE, bbox, area or score violations.
SegmentSet load_segments(const std::filesystem::path& path);
void save_segments(const SegmentSet& set, const std::filesystem::path& path);

// Adapter protocol: `command <request.json> <output-segments.json>`.
nlohmann::json segmenter_request(const std::filesystem::path& image_path, int width, int height,
                                 const GridPromptSpec& spec);

SegmentSet run_segmenter_adapter(const std::string& command,
                                 const std::filesystem::path& image_path, int width, int height,
                                 const GridPromptSpec& spec,
                                 const std::filesystem::path& work_dir = {});

}  // namespace sdm
