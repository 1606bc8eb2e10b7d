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

#include "sdm/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "sdm/error.hpp"

namespace sdm {

namespace {

// Local occupancy grid with a one-pixel empty border.
class Grid {
 public:
  Grid(int height, int width) : h_(height), w_(width), cells_(static_cast<std::size_t>(h_) * w_, 0) {}

  int height() const noexcept { return h_; }
  int width() const noexcept { return w_; }
  bool filled(int r, int c) const noexcept {
    return r >= 0 && c >= 0 && r < h_ && c < w_ && cells_[static_cast<std::size_t>(r) * w_ + c];
  }
  std::uint8_t& cell(int r, int c) noexcept { return cells_[static_cast<std::size_t>(r) * w_ + c]; }

 private:
  int h_, w_;
  std::vector<std::uint8_t> cells_;
};

struct Component {
  std::vector<std::pair<int, int>> pixels;  // (row, col)
  int min_r, min_c, max_r, max_c;
};

std::vector<Component> components_8(const Bitmap& bm, const BBox& box) {
  std::vector<Component> out;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(box.w) * box.h, 0);
  auto idx = [&](int r, int c) { return static_cast<std::size_t>(r - box.y) * box.w + (c - box.x); };
  std::deque<std::pair<int, int>> queue;
  for (int r = box.y; r < box.y + box.h; ++r) {
    for (int c = box.x; c < box.x + box.w; ++c) {
      if (!bm.at(r, c) || seen[idx(r, c)]) continue;
      Component comp{{}, r, c, r, c};
      seen[idx(r, c)] = 1;
      queue.push_back({r, c});
      while (!queue.empty()) {
        auto [pr, pc] = queue.front();
        queue.pop_front();
        comp.pixels.push_back({pr, pc});
        comp.min_r = std::min(comp.min_r, pr);
        comp.max_r = std::max(comp.max_r, pr);
        comp.min_c = std::min(comp.min_c, pc);
        comp.max_c = std::max(comp.max_c, pc);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = pr + dr, nc = pc + dc;
            if (nr < box.y || nc < box.x || nr >= box.y + box.h || nc >= box.x + box.w) continue;
            if (!bm.at(nr, nc) || seen[idx(nr, nc)]) continue;
            seen[idx(nr, nc)] = 1;
            queue.push_back({nr, nc});
          }
        }
      }
      out.push_back(std::move(comp));
    }
  }
  return out;
}

// Component with holes filled: background reachable (4-connected) from the
// padded border stays empty, everything else is interior.
Grid filled_component(const Component& comp) {
  const int h = comp.max_r - comp.min_r + 3;
  const int w = comp.max_c - comp.min_c + 3;
  Grid grid(h, w);
  for (auto [r, c] : comp.pixels) grid.cell(r - comp.min_r + 1, c - comp.min_c + 1) = 1;
  Grid outside(h, w);
  std::deque<std::pair<int, int>> queue{{0, 0}};
  outside.cell(0, 0) = 1;
  while (!queue.empty()) {
    auto [r, c] = queue.front();
    queue.pop_front();
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int nr = r + dr[k], nc = c + dc[k];
      if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
      if (grid.filled(nr, nc) || outside.filled(nr, nc)) continue;
      outside.cell(nr, nc) = 1;
      queue.push_back({nr, nc});
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) grid.cell(r, c) = outside.filled(r, c) ? 0 : 1;
  }
  return grid;
}

enum Dir { kEast = 0, kSouth = 1, kWest = 2, kNorth = 3 };
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

// A lattice edge leaving (x, y) in `d` is on the outline when the pixel on
// its right is filled and the pixel on its left is empty.
bool boundary_edge(const Grid& g, int x, int y, int d) {
  switch (d) {
    case kEast: return g.filled(y, x) && !g.filled(y - 1, x);
    case kSouth: return g.filled(y, x - 1) && !g.filled(y, x);
    case kWest: return g.filled(y - 1, x - 1) && !g.filled(y, x - 1);
    default: return g.filled(y - 1, x) && !g.filled(y - 1, x - 1);
  }
}

Polygon trace_outline(const Grid& g) {
  int sr = -1, sc = -1;
  for (int r = 0; r < g.height() && sr < 0; ++r) {
    for (int c = 0; c < g.width(); ++c) {
      if (g.filled(r, c)) {
        sr = r;
        sc = c;
        break;
      }
    }
  }
  Polygon ring;
  if (sr < 0) return ring;
  int x = sc, y = sr, d = kEast;
  ring.push_back({static_cast<double>(x), static_cast<double>(y)});
  const std::size_t limit = 4 * static_cast<std::size_t>(g.height() + 1) * (g.width() + 1);
  for (std::size_t steps = 0; steps < limit; ++steps) {
    x += kDx[d];
    y += kDy[d];
    // Left turn first joins diagonal neighbours into one outline.
    int next = -1;
    for (int turn : {3, 0, 1}) {
      const int cand = (d + turn) % 4;
      if (boundary_edge(g, x, y, cand)) {
        next = cand;
        break;
      }
    }
    if (next < 0) throw Error(ErrorCode::InvariantViolation, "outline trace lost the boundary");
    if (x == sc && y == sr && next == kEast) return ring;
    if (next != d) ring.push_back({static_cast<double>(x), static_cast<double>(y)});
    d = next;
  }
  throw Error(ErrorCode::InvariantViolation, "outline trace did not close");
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

void rdp(const Polygon& pts, std::size_t first, std::size_t last, double eps,
         std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double best = -1.0;
  std::size_t index = first;
  for (std::size_t k = first + 1; k < last; ++k) {
    const double d = segment_distance(pts[k], pts[first], pts[last]);
    if (d > best) {
      best = d;
      index = k;
    }
  }
  if (best > eps) {
    keep[index] = true;
    rdp(pts, first, index, eps, keep);
    rdp(pts, index, last, eps, keep);
  }
}

}  // namespace

Polygon simplify_closed(const Polygon& ring, double epsilon) {
  if (ring.size() <= 3) return ring;
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t k = 1; k < ring.size(); ++k) {
    const double dx = ring[k].x - ring[0].x, dy = ring[k].y - ring[0].y;
    const double d = dx * dx + dy * dy;
    if (d > best) {
      best = d;
      far = k;
    }
  }
  Polygon closed = ring;
  closed.push_back(ring.front());
  std::vector<bool> keep(closed.size(), false);
  keep[0] = keep[far] = true;
  rdp(closed, 0, far, epsilon, keep);
  rdp(closed, far, closed.size() - 1, epsilon, keep);
  Polygon out;
  for (std::size_t k = 0; k + 1 < closed.size(); ++k) {
    if (keep[k]) out.push_back(closed[k]);
  }
  return out.size() >= 3 ? out : ring;
}

std::vector<Polygon> mask_to_polygons(const Mask& mask, const PolygonOptions& options) {
  if (mask.area() == 0) throw Error(ErrorCode::EmptyMask, "mask " + mask.id() + " is empty");
  std::vector<Polygon> out;
  for (const auto& comp : components_8(mask.bitmap(), mask.bbox())) {
    if (static_cast<std::int64_t>(comp.pixels.size()) < options.min_component_area) continue;
    Polygon ring = trace_outline(filled_component(comp));
    // Grid coordinates are offset by the padding pixel.
    for (auto& p : ring) {
      p.x += comp.min_c - 1;
      p.y += comp.min_r - 1;
    }
    out.push_back(simplify_closed(ring, options.epsilon));
  }
  return out;
}

Bitmap rasterize_polygons(std::span<const Polygon> polygons, int height, int width) {
  Bitmap out(height, width);
  std::vector<double> xs;
  for (const auto& poly : polygons) {
    if (poly.size() < 3) continue;
    double min_y = poly[0].y, max_y = poly[0].y;
    for (const auto& p : poly) {
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const int r0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int r1 = std::min(height - 1, static_cast<int>(std::ceil(max_y)));
    for (int r = r0; r <= r1; ++r) {
      const double yc = r + 0.5;
      xs.clear();
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % poly.size()];
        if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y)) {
          xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
        }
      }
      std::sort(xs.begin(), xs.end());
      for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
        const int c0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
        const int c1 = std::min(width, static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
        for (int c = c0; c < c1; ++c) out.set(r, c);
      }
    }
  }
  return out;
}

}  // namespace sdm
