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
#include <span>
#include <vector>

#include "sdm/mask.hpp"

namespace sdm {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

using Polygon = std::vector<Point>;

struct PolygonOptions {
  // Maximum deviation, in pixels, allowed when simplifying a traced outline.
  double epsilon = 0.5;
  // 8-connected components smaller than this are dropped.
  std::int64_t min_component_area = 4;
};

// Outer outline of each 8-connected component, traced along pixel edges
// (vertices on the pixel-corner lattice, clockwise in image coordinates),
// holes dropped, then simplified. Throws EmptyMask.
std::vector<Polygon> mask_to_polygons(const Mask& mask, const PolygonOptions& options = {});

// Closed-curve Ramer-Douglas-Peucker; never returns fewer than 3 vertices
// when the input has at least 3.
Polygon simplify_closed(const Polygon& ring, double epsilon);

// Pixel (r, c) is set when its centre (c + 0.5, r + 0.5) lies inside any
// polygon under the even-odd rule.
Bitmap rasterize_polygons(std::span<const Polygon> polygons, int height, int width);

}  // namespace sdm
