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

// Color-histogram embedder speaking the embedder adapter protocol:
//   sdm_stub_embedder <manifest.json> <output.embeddings>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "sdm/embeddings.hpp"
#include "synth.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: sdm_stub_embedder <manifest> <output>\n");
    return 64;
  }
  try {
    const auto manifest = nlohmann::json::parse(std::ifstream(argv[1]));
    const std::string kind = manifest.at("kind").get<std::string>();
    std::vector<std::string> ids;
    std::vector<float> values;
    for (const auto& item : manifest.at("items")) {
      ids.push_back(item.at("id").get<std::string>());
      const auto f = kind == "image"
                         ? sdm::synth::color_features(sdm::read_png_rgb(item.at("path").get<std::string>()))
                         : sdm::synth::text_features(item.at("text").get<std::string>());
      values.insert(values.end(), f.begin(), f.end());
    }
    sdm::write_embeddings(sdm::EmbeddingBlock(std::move(ids), sdm::synth::kFeatureDim, std::move(values)),
                          argv[2]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sdm_stub_embedder: %s\n", e.what());
    return 1;
  }
  return 0;
}
