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

// Threshold segmenter speaking the segmenter adapter protocol:
//   sdm_stub_segmenter [--duplicates] [--fail-on <text>] <request.json> <segments.json>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sdm/segments.hpp"
#include "synth.hpp"

int main(int argc, char** argv) {
  bool duplicates = false;
  std::string fail_on;
  std::vector<std::string> pos;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--duplicates") == 0) {
      duplicates = true;
    } else if (std::strcmp(argv[i], "--fail-on") == 0 && i + 1 < argc) {
      fail_on = argv[++i];
    } else {
      pos.emplace_back(argv[i]);
    }
  }
  if (pos.size() != 2) {
    std::fprintf(stderr, "usage: sdm_stub_segmenter [--duplicates] [--fail-on <text>] <request> <output>\n");
    return 64;
  }
  try {
    const auto request = nlohmann::json::parse(std::ifstream(pos[0]));
    const std::filesystem::path image_path = request.at("image").get<std::string>();
    if (!fail_on.empty() && image_path.filename().string().find(fail_on) != std::string::npos) {
      std::fprintf(stderr, "refusing %s\n", image_path.string().c_str());
      return 3;
    }
    const sdm::RgbImage image = sdm::read_png_rgb(image_path);
    std::vector<std::pair<double, double>> points;
    for (const auto& p : request.at("points")) points.emplace_back(p[0].get<double>(), p[1].get<double>());

    sdm::SegmentSet set;
    set.image_ref = image_path.filename().string();
    set.width = image.width();
    set.height = image.height();
    int k = 0;
    for (auto& bm : sdm::synth::threshold_components(image, points)) {
      const sdm::BBox b = sdm::bbox_of(bm);
      // Deterministic pseudo-confidence per region.
      const double stability = 0.90 + 0.09 * ((b.x * 31 + b.y * 17 + b.w * 7 + b.h) % 97) / 96.0;
      sdm::Bitmap eroded = duplicates ? sdm::synth::erode(bm) : sdm::Bitmap();
      set.segments.emplace_back("m" + std::to_string(k++), std::move(bm), stability, stability);
      if (duplicates && eroded.count() > 0) {
        set.segments.emplace_back("m" + std::to_string(k++), std::move(eroded), stability - 0.1, stability - 0.1);
      }
    }
    sdm::save_segments(set, pos[1]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sdm_stub_segmenter: %s\n", e.what());
    return 1;
  }
  return 0;
}
