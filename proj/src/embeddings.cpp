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

#include "sdm/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sdm/error.hpp"

namespace sdm {

EmbeddingBlock::EmbeddingBlock(std::vector<std::string> ids, std::uint32_t dim,
                               std::vector<float> vectors)
    : ids_(std::move(ids)), dim_(dim), vectors_(std::move(vectors)) {
  if (vectors_.size() != ids_.size() * static_cast<std::size_t>(dim_)) {
    throw Error(ErrorCode::DimMismatch, "embedding payload has " + std::to_string(vectors_.size()) +
                                            " values for " + std::to_string(ids_.size()) + "x" +
                                            std::to_string(dim_));
  }
}

EmbeddingBlock normalize_rows(const EmbeddingBlock& block) {
  std::vector<float> out(block.values().size());
  for (std::size_t i = 0; i < block.count(); ++i) {
    const auto row = block.row(i);
    double sq = 0.0;
    for (float v : row) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::ZeroNormRow, "embedding row '" + block.ids()[i] + "' has norm " +
                                              std::to_string(norm));
    }
    for (std::size_t d = 0; d < row.size(); ++d) {
      out[i * block.dim() + d] = static_cast<float>(row[d] / norm);
    }
  }
  return EmbeddingBlock(block.ids(), block.dim(), std::move(out));
}

EmbeddingBlock select_rows(const EmbeddingBlock& block, std::span<const std::string> ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < block.count(); ++i) index.emplace(block.ids()[i], i);
  std::vector<float> values;
  values.reserve(ids.size() * block.dim());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw Error(ErrorCode::IdMismatch, "no embedding for id '" + id + "'");
    const auto row = block.row(it->second);
    values.insert(values.end(), row.begin(), row.end());
  }
  return EmbeddingBlock({ids.begin(), ids.end()}, block.dim(), std::move(values));
}

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'D', 'M', 'E'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes[offset + k]) << (8 * k);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_embeddings(const EmbeddingBlock& block) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kEmbeddingsFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(block.count()));
  put_u32(out, block.dim());
  out.reserve(kHeaderBytes + block.values().size() * 4 + 16 * block.count());
  for (float f : block.values()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  const std::string ids = nlohmann::json(block.ids()).dump();
  out.insert(out.end(), ids.begin(), ids.end());
  return out;
}

EmbeddingBlock deserialize_embeddings(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw Error(ErrorCode::ParseError, "embeddings header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::MagicMismatch, "embeddings file does not start with SDME");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kEmbeddingsFormatVersion) {
    throw Error(ErrorCode::ParseError, "unsupported embeddings version " + std::to_string(version));
  }
  const std::uint64_t count = get_u32(bytes, 8);
  const std::uint64_t dim = get_u32(bytes, 12);
  const std::uint64_t payload = count * dim * 4;
  if (bytes.size() < kHeaderBytes + payload) {
    throw Error(ErrorCode::ParseError, "embeddings payload truncated: expected " +
                                           std::to_string(payload) + " bytes");
  }
  std::vector<float> values(count * dim);
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * k));
  }
  const auto tail = bytes.subspan(kHeaderBytes + payload);
  std::vector<std::string> ids;
  try {
    ids = nlohmann::json::parse(tail.begin(), tail.end()).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("embeddings id array: ") + e.what());
  }
  if (ids.size() != count) {
    throw Error(ErrorCode::DimMismatch, "header count " + std::to_string(count) + " but " +
                                            std::to_string(ids.size()) + " ids");
  }
  return EmbeddingBlock(std::move(ids), static_cast<std::uint32_t>(dim), std::move(values));
}

void write_embeddings(const EmbeddingBlock& block, const std::filesystem::path& path) {
  const auto bytes = serialize_embeddings(block);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

EmbeddingBlock read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return deserialize_embeddings(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.detail());
  }
}

}  // namespace sdm
