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

#include "sdm/nms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdm/error.hpp"

namespace sdm {

void NmsConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "nms threshold must lie in (0, 1], got " + std::to_string(threshold));
  }
  if (min_area < 0) throw Error(ErrorCode::InvalidArgument, "nms min_area must be >= 0");
}

NmsOutcome mask_nms(std::span<const Mask> masks, const NmsConfig& config) {
  config.validate();
  const std::size_t n = masks.size();
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!masks[i].stability_score()) {
      throw Error(ErrorCode::MissingScore, "mask " + masks[i].id() + " has no stability score");
    }
    scores[i] = *masks[i].stability_score();
    if (masks[i].height() != masks[0].height() || masks[i].width() != masks[0].width()) {
      throw Error(ErrorCode::DimensionMismatch, "mask " + masks[i].id() + " differs from " +
                                                    masks[0].id());
    }
  }

  std::vector<bool> keep(n, true);
  std::vector<std::size_t> suppressor(n, 0);
  std::vector<double> ratio(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!keep[j]) continue;
      const std::int64_t inter = intersection_count(masks[i], masks[j]);
      const std::int64_t smaller_area = std::min(masks[i].area(), masks[j].area());
      if (static_cast<double>(inter) > config.threshold * static_cast<double>(smaller_area)) {
        const double r =
            smaller_area > 0 ? static_cast<double>(inter) / static_cast<double>(smaller_area) : 0.0;
        if (scores[i] < scores[j]) {
          // Only the first suppression of i is recorded; later ones are
          // no-ops on the keep flag.
          if (keep[i]) {
            keep[i] = false;
            suppressor[i] = j;
            ratio[i] = r;
          }
          if (config.break_on_suppress) break;
        } else {
          keep[j] = false;
          suppressor[j] = i;
          ratio[j] = r;
        }
      }
    }
  }

  NmsOutcome out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) {
      out.kept.push_back(i);
    } else {
      out.suppressed.push_back({i, suppressor[i], ratio[i]});
    }
  }
  return out;
}

std::vector<Mask> filter_min_area(std::span<const Mask> masks, std::int64_t min_area) {
  std::vector<Mask> out;
  out.reserve(masks.size());
  for (const auto& m : masks) {
    if (m.area() >= min_area) out.push_back(m);
  }
  return out;
}

}  // namespace sdm
