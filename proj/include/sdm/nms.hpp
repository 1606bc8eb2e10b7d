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

#include <cstddef>
#include <span>
#include <vector>

#include "sdm/mask.hpp"

namespace sdm {

struct NmsConfig {
  // Fraction of the smaller mask's area that the intersection must exceed.
  double threshold = 0.9;
  std::int64_t min_area = 0;
  // Stop scanning j once mask i is suppressed. Off by default: the published
  // pseudocode keeps scanning.
  bool break_on_suppress = false;

  void validate() const;
};

struct Suppression {
  std::size_t index = 0;
  std::size_t suppressor = 0;
  double smaller_ratio = 0.0;

  friend bool operator==(const Suppression&, const Suppression&) = default;
};

struct NmsOutcome {
  std::vector<std::size_t> kept;
  std::vector<Suppression> suppressed;

  friend bool operator==(const NmsOutcome&, const NmsOutcome&) = default;
};

// Pairwise mask suppression over the input order. For i < j, when
// |Mi ∩ Mj| > threshold * min(|Mi|, |Mj|), the lower-scored mask is dropped;
// equal scores drop j.
NmsOutcome mask_nms(std::span<const Mask> masks, const NmsConfig& config = {});

std::vector<Mask> filter_min_area(std::span<const Mask> masks, std::int64_t min_area);

}  // namespace sdm
