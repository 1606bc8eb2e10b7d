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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sdm {

// count x dim float32 vectors with one id per row.
class EmbeddingBlock {
 public:
  EmbeddingBlock() = default;
  EmbeddingBlock(std::vector<std::string> ids, std::uint32_t dim, std::vector<float> vectors);

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return ids_.size(); }
  const std::vector<float>& values() const noexcept { return vectors_; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {vectors_.data() + i * dim_, dim_};
  }

  friend bool operator==(const EmbeddingBlock&, const EmbeddingBlock&) = default;

 private:
  std::vector<std::string> ids_;
  std::uint32_t dim_ = 0;
  std::vector<float> vectors_;
};

// Throws ZeroNormRow naming the offending id (also for non-finite rows).
EmbeddingBlock normalize_rows(const EmbeddingBlock& block);

// Rows selected by id, in the requested order. IdMismatch when any is absent.
EmbeddingBlock select_rows(const EmbeddingBlock& block, std::span<const std::string> ids);

inline constexpr std::uint32_t kEmbeddingsFormatVersion = 1;

// Binary layout, little-endian: "SDME", u32 version, u32 count, u32 dim,
// count*dim float32, then a UTF-8 JSON array of ids.
std::vector<std::uint8_t> serialize_embeddings(const EmbeddingBlock& block);
EmbeddingBlock deserialize_embeddings(std::span<const std::uint8_t> bytes);

void write_embeddings(const EmbeddingBlock& block, const std::filesystem::path& path);
EmbeddingBlock read_embeddings(const std::filesystem::path& path);

}  // namespace sdm
