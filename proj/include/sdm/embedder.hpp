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

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdm/crop.hpp"
#include "sdm/embeddings.hpp"

namespace sdm {

struct TextItem {
  std::string id;
  std::string text;
};

// Adapter protocol: `command <input-manifest.json> <output.embeddings>`.
// The manifest is {"kind": "image"|"text", "items": [{"id", "path"|"text"}]}.
// The returned block follows the request order; IdMismatch if the adapter
// drops, adds or repeats an id.
EmbeddingBlock run_embedder_adapter(const std::string& command, std::span<const SegmentCrop> crops,
                                    const std::filesystem::path& work_dir = {});
EmbeddingBlock run_embedder_adapter(const std::string& command, std::span<const TextItem> texts,
                                    const std::filesystem::path& work_dir = {});

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string identity() const = 0;
  virtual EmbeddingBlock embed_crops(std::span<const SegmentCrop> crops) = 0;
  virtual EmbeddingBlock embed_texts(std::span<const TextItem> texts) = 0;
};

class AdapterEmbedder final : public Embedder {
 public:
  explicit AdapterEmbedder(std::string command, std::filesystem::path work_dir = {});

  std::string identity() const override { return "adapter:" + command_; }
  EmbeddingBlock embed_crops(std::span<const SegmentCrop> crops) override;
  EmbeddingBlock embed_texts(std::span<const TextItem> texts) override;

  std::size_t crop_calls() const noexcept { return crop_calls_; }
  std::size_t text_calls() const noexcept { return text_calls_; }

 private:
  std::string command_;
  std::filesystem::path work_dir_;
  std::atomic<std::size_t> crop_calls_{0};
  std::atomic<std::size_t> text_calls_{0};
};

// Text embeddings keyed by (embedder identity, description). Concurrent
// lookups share the lock; inserts take it exclusively. Optionally mirrored
// to one file per entry under `disk_dir`.
class TextEmbeddingCache {
 public:
  using Compute = std::function<EmbeddingBlock(std::span<const TextItem>)>;

  explicit TextEmbeddingCache(std::filesystem::path disk_dir = {});

  // One row per item, ids taken from the items. `compute` is invoked once
  // with only the missing descriptions.
  EmbeddingBlock embed(const std::string& identity, std::span<const TextItem> items,
                       const Compute& compute);

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  std::filesystem::path entry_path(const std::string& identity, const std::string& text) const;

  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::string>, std::vector<float>> entries_;
  std::filesystem::path disk_dir_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace sdm
