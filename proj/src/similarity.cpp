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

#include "sdm/similarity.hpp"

#include "sdm/error.hpp"

namespace sdm {

SimilarityMatrix similarity_matrix(const EmbeddingBlock& image, const EmbeddingBlock& text,
                                   const std::vector<std::string>& col_labels) {
  if (image.dim() != text.dim() && image.count() > 0 && text.count() > 0) {
    throw Error(ErrorCode::DimMismatch, "image dim " + std::to_string(image.dim()) +
                                            " vs text dim " + std::to_string(text.dim()));
  }
  if (!col_labels.empty() && col_labels.size() != text.count()) {
    throw Error(ErrorCode::DimMismatch, "column labels do not match text rows");
  }
  SimilarityMatrix m;
  m.rows = image.ids();
  m.cols = col_labels.empty() ? text.ids() : col_labels;
  m.values.resize(image.count() * text.count());
  const std::size_t dim = image.dim();
  for (std::size_t i = 0; i < image.count(); ++i) {
    const float* a = image.row(i).data();
    for (std::size_t j = 0; j < text.count(); ++j) {
      const float* b = text.row(j).data();
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += static_cast<double>(a[d]) * b[d];
      m.values[i * text.count() + j] = dot;
    }
  }
  return m;
}

std::vector<Assignment> assign_labels(const SimilarityMatrix& matrix,
                                      const std::optional<SimilarityFloor>& floor) {
  if (matrix.col_count() == 0) {
    throw Error(ErrorCode::InvalidArgument, "assign_labels needs at least one prompt column");
  }
  std::vector<Assignment> out;
  out.reserve(matrix.row_count());
  for (std::size_t r = 0; r < matrix.row_count(); ++r) {
    int best = 0;
    int second = -1;
    for (std::size_t c = 1; c < matrix.col_count(); ++c) {
      const double v = matrix.at(r, c);
      if (v > matrix.at(r, best)) {
        second = best;
        best = static_cast<int>(c);
      } else if (second < 0 || v > matrix.at(r, second)) {
        second = static_cast<int>(c);
      }
    }
    Assignment a;
    a.segment_id = matrix.rows[r];
    a.class_index = best;
    a.similarity = matrix.at(r, best);
    if (second >= 0) a.runner_up = RunnerUp{second, matrix.at(r, second)};
    if (floor && a.similarity < floor->value) {
      a.class_index = floor->background_class;
      a.below_floor = true;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace sdm
