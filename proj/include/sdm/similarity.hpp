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

#include <optional>
#include <string>
#include <vector>

#include "sdm/embeddings.hpp"

namespace sdm {

// rows: segment ids, cols: prompt labels; values row-major.
struct SimilarityMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<double> values;

  std::size_t row_count() const noexcept { return rows.size(); }
  std::size_t col_count() const noexcept { return cols.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols.size() + c]; }

  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;
};

// Both blocks must already be row-normalized. Throws DimMismatch.
SimilarityMatrix similarity_matrix(const EmbeddingBlock& image, const EmbeddingBlock& text,
                                   const std::vector<std::string>& col_labels = {});

struct RunnerUp {
  int class_index = 0;
  double similarity = 0.0;

  friend bool operator==(const RunnerUp&, const RunnerUp&) = default;
};

struct Assignment {
  std::string segment_id;
  int class_index = 0;
  double similarity = 0.0;
  std::optional<RunnerUp> runner_up;
  bool below_floor = false;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Optional rejection floor: rows whose best similarity is below `value` are
// assigned to `background_class`. Not applied unless configured.
struct SimilarityFloor {
  double value = 0.0;
  int background_class = 0;
};

// Per-row argmax; ties go to the lowest class index.
std::vector<Assignment> assign_labels(const SimilarityMatrix& matrix,
                                      const std::optional<SimilarityFloor>& floor = std::nullopt);

}  // namespace sdm
