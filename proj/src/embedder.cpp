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

#include "sdm/embedder.hpp"

#include <fstream>
#include <mutex>
#include <set>

#include <nlohmann/json.hpp>

#include "sdm/digest.hpp"
#include "sdm/error.hpp"
#include "sdm/process.hpp"

namespace sdm {

using nlohmann::json;

namespace {

class ScratchDir {
 public:
  explicit ScratchDir(const std::filesystem::path& parent)
      : path_(make_scratch_dir("sdm-emb", parent)) {}
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

EmbeddingBlock invoke(const std::string& command, const json& manifest,
                      const std::vector<std::string>& ids, const ScratchDir& dir) {
  const auto manifest_path = dir.path() / "manifest.json";
  const auto output = dir.path() / "output.embeddings";
  {
    std::ofstream out(manifest_path);
    out << manifest.dump() << '\n';
  }
  const auto result = run_command(command, {manifest_path.string(), output.string()});
  if (result.exit_code != 0) {
    throw Error(ErrorCode::AdapterFailure,
                "embedder exited with " + std::to_string(result.exit_code) + ": " + result.output);
  }
  if (!std::filesystem::exists(output)) {
    throw Error(ErrorCode::AdapterFailure, "embedder produced no output file: " + result.output);
  }
  EmbeddingBlock block = read_embeddings(output);

  const std::set<std::string> want(ids.begin(), ids.end());
  std::set<std::string> got;
  for (const auto& id : block.ids()) {
    if (!got.insert(id).second) throw Error(ErrorCode::IdMismatch, "embedder repeated id '" + id + "'");
    if (!want.count(id)) throw Error(ErrorCode::IdMismatch, "embedder returned unknown id '" + id + "'");
  }
  for (const auto& id : ids) {
    if (!got.count(id)) throw Error(ErrorCode::IdMismatch, "embedder omitted id '" + id + "'");
  }
  return select_rows(block, ids);
}

}  // namespace

EmbeddingBlock run_embedder_adapter(const std::string& command, std::span<const SegmentCrop> crops,
                                    const std::filesystem::path& work_dir) {
  ScratchDir dir(work_dir);
  json items = json::array();
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < crops.size(); ++i) {
    const auto path = dir.path() / ("crop-" + std::to_string(i) + ".png");
    write_png_rgb(path, crops[i].pixels);
    items.push_back({{"id", crops[i].segment_id}, {"path", path.string()}});
    ids.push_back(crops[i].segment_id);
  }
  return invoke(command, {{"kind", "image"}, {"items", std::move(items)}}, ids, dir);
}

EmbeddingBlock run_embedder_adapter(const std::string& command, std::span<const TextItem> texts,
                                    const std::filesystem::path& work_dir) {
  ScratchDir dir(work_dir);
  json items = json::array();
  std::vector<std::string> ids;
  for (const auto& t : texts) {
    items.push_back({{"id", t.id}, {"text", t.text}});
    ids.push_back(t.id);
  }
  return invoke(command, {{"kind", "text"}, {"items", std::move(items)}}, ids, dir);
}

AdapterEmbedder::AdapterEmbedder(std::string command, std::filesystem::path work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {}

EmbeddingBlock AdapterEmbedder::embed_crops(std::span<const SegmentCrop> crops) {
  ++crop_calls_;
  return run_embedder_adapter(command_, crops, work_dir_);
}

EmbeddingBlock AdapterEmbedder::embed_texts(std::span<const TextItem> texts) {
  ++text_calls_;
  return run_embedder_adapter(command_, texts, work_dir_);
}

TextEmbeddingCache::TextEmbeddingCache(std::filesystem::path disk_dir)
    : disk_dir_(std::move(disk_dir)) {
  if (!disk_dir_.empty()) std::filesystem::create_directories(disk_dir_);
}

std::filesystem::path TextEmbeddingCache::entry_path(const std::string& identity,
                                                     const std::string& text) const {
  return disk_dir_ / (Sha256().field(identity).field(text).hex() + ".embeddings");
}

EmbeddingBlock TextEmbeddingCache::embed(const std::string& identity,
                                         std::span<const TextItem> items, const Compute& compute) {
  std::vector<TextItem> missing;
  std::set<std::string> missing_texts;
  {
    std::shared_lock lock(mutex_);
    for (const auto& item : items) {
      if (entries_.count({identity, item.text})) continue;
      if (missing_texts.insert(item.text).second) missing.push_back(item);
    }
  }
  // Disk entries satisfy misses before the embedder is asked.
  if (!disk_dir_.empty() && !missing.empty()) {
    std::vector<TextItem> still;
    std::unique_lock lock(mutex_);
    for (const auto& item : missing) {
      const auto path = entry_path(identity, item.text);
      if (std::filesystem::exists(path)) {
        const auto block = read_embeddings(path);
        const auto row = block.row(0);
        entries_[{identity, item.text}] = {row.begin(), row.end()};
      } else {
        still.push_back(item);
      }
    }
    missing = std::move(still);
  }
  if (!missing.empty()) {
    misses_ += missing.size();
    const EmbeddingBlock fresh = compute(missing);
    if (fresh.count() != missing.size()) {
      throw Error(ErrorCode::IdMismatch, "text embedder returned " + std::to_string(fresh.count()) +
                                             " rows for " + std::to_string(missing.size()));
    }
    std::unique_lock lock(mutex_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      const auto row = fresh.row(i);
      entries_[{identity, missing[i].text}] = {row.begin(), row.end()};
      if (!disk_dir_.empty()) {
        write_embeddings(EmbeddingBlock({missing[i].id}, fresh.dim(), {row.begin(), row.end()}),
                         entry_path(identity, missing[i].text));
      }
    }
  }
  hits_ += items.size() - missing.size();

  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  std::vector<float> values;
  std::uint32_t dim = 0;
  for (const auto& item : items) {
    const auto& vec = entries_.at({identity, item.text});
    if (dim == 0) dim = static_cast<std::uint32_t>(vec.size());
    if (vec.size() != dim) throw Error(ErrorCode::DimMismatch, "cached text embeddings differ in dim");
    ids.push_back(item.id);
    values.insert(values.end(), vec.begin(), vec.end());
  }
  return EmbeddingBlock(std::move(ids), dim, std::move(values));
}

}  // namespace sdm
