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

#include "support.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "sdm/process.hpp"

namespace sdm::testing {

namespace fs = std::filesystem;
using nlohmann::json;

TempDir::TempDir(const std::string& prefix) : path_(make_scratch_dir(prefix)) {}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path stub_dir() { return SDM_STUB_DIR; }

std::string stub_segmenter(bool duplicates) {
  return shell_quote((stub_dir() / "sdm_stub_segmenter").string()) + (duplicates ? " --duplicates" : "");
}

std::string stub_embedder() { return shell_quote((stub_dir() / "sdm_stub_embedder").string()); }

Bitmap random_bitmap(synth::Rng& rng, int height, int width, double density) {
  Bitmap b(height, width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (rng.unit() < density) b.set(r, c);
  return b;
}

Bitmap rect_bitmap(int height, int width, int x, int y, int w, int h) {
  Bitmap b(height, width);
  for (int r = std::max(0, y); r < std::min(height, y + h); ++r)
    for (int c = std::max(0, x); c < std::min(width, x + w); ++c) b.set(r, c);
  return b;
}

std::vector<Mask> random_nms_instance(synth::Rng& rng, const NmsInstanceOptions& o) {
  const int n = rng.uniform(0, o.max_masks);
  std::vector<Bitmap> bitmaps;
  for (int k = 0; k < n; ++k) {
    const int kind = bitmaps.empty() ? 0 : rng.uniform(0, 5);
    if (kind <= 1) {
      const int w = rng.uniform(1, o.width / 2), h = rng.uniform(1, o.height / 2);
      bitmaps.push_back(rect_bitmap(o.height, o.width, rng.uniform(0, o.width - w), rng.uniform(0, o.height - h), w, h));
    } else if (kind == 2) {
      bitmaps.push_back(bitmaps[rng.uniform(0, static_cast<int>(bitmaps.size()) - 1)]);
    } else if (kind == 3) {
      // Near duplicate: flip a few pixels of an earlier mask.
      Bitmap b = bitmaps[rng.uniform(0, static_cast<int>(bitmaps.size()) - 1)];
      for (int f = rng.uniform(1, 12); f > 0; --f) {
        const int r = rng.uniform(0, o.height - 1), c = rng.uniform(0, o.width - 1);
        b.set(r, c, !b.at(r, c));
      }
      bitmaps.push_back(std::move(b));
    } else if (kind == 4) {
      // Subset of an earlier mask.
      const Bitmap& src = bitmaps[rng.uniform(0, static_cast<int>(bitmaps.size()) - 1)];
      Bitmap b(o.height, o.width);
      const double keep = 0.6 + 0.4 * rng.unit();
      for (int r = 0; r < o.height; ++r)
        for (int c = 0; c < o.width; ++c)
          if (src.at(r, c) && rng.unit() < keep) b.set(r, c);
      bitmaps.push_back(std::move(b));
    } else {
      bitmaps.push_back(random_bitmap(rng, o.height, o.width, 0.05 + 0.3 * rng.unit()));
    }
  }
  std::vector<Mask> masks;
  for (int k = 0; k < n; ++k) {
    // Coarse scores so ties are common.
    const double score = rng.uniform(0, 20) / 20.0;
    masks.emplace_back("m" + std::to_string(k), std::move(bitmaps[k]), score);
  }
  return masks;
}

std::vector<bool> reference_mask_nms(const std::vector<Mask>& masks, double threshold) {
  // keep: a list initialized to all True
  std::vector<bool> keep(masks.size(), true);
  std::vector<long long> areas;
  for (const auto& m : masks) {
    long long a = 0;
    for (auto v : m.bitmap().data()) a += v;
    areas.push_back(a);
  }
  auto intersection = [](const Mask& a, const Mask& b) {
    long long n = 0;
    const auto& da = a.bitmap().data();
    const auto& db = b.bitmap().data();
    for (std::size_t k = 0; k < da.size(); ++k) n += (da[k] && db[k]) ? 1 : 0;
    return n;
  };
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!keep[i]) continue;
    for (std::size_t j = i + 1; j < masks.size(); ++j) {
      if (!keep[j]) continue;
      const long long inter = intersection(masks[i], masks[j]);
      const long long smaller_area = std::min(areas[i], areas[j]);
      if (inter > threshold * smaller_area) {
        if (*masks[i].stability_score() < *masks[j].stability_score()) {
          keep[i] = false;
        } else {
          keep[j] = false;
        }
      }
    }
  }
  return keep;
}

namespace {

double ref_iou(const Detection& a, const Detection& b, GeometryKind kind) {
  if (kind == GeometryKind::Box) {
    const double x1 = std::max(a.box.x, b.box.x), y1 = std::max(a.box.y, b.box.y);
    const double x2 = std::min(a.box.x + a.box.w, b.box.x + b.box.w);
    const double y2 = std::min(a.box.y + a.box.h, b.box.y + b.box.h);
    const double inter = std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1);
    const double uni = a.box.w * a.box.h + b.box.w * b.box.h - inter;
    return uni > 0 ? inter / uni : 0.0;
  }
  long long inter = 0, uni = 0;
  const auto& da = a.mask->bitmap().data();
  const auto& db = b.mask->bitmap().data();
  for (std::size_t k = 0; k < da.size(); ++k) {
    inter += (da[k] && db[k]) ? 1 : 0;
    uni += (da[k] || db[k]) ? 1 : 0;
  }
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace

ReferenceMetrics reference_coco_eval(const EvalDataset& gt, const EvalDataset& dets, GeometryKind kind,
                                     int max_dets) {
  std::vector<std::string> image_order;
  for (const auto& im : gt.images) image_order.push_back(im.ref);
  for (const auto& im : dets.images) {
    if (std::find(image_order.begin(), image_order.end(), im.ref) == image_order.end()) image_order.push_back(im.ref);
  }
  const auto thresholds = EvalSettings::default_iou_thresholds();
  ReferenceMetrics out;
  int classes_with_gt = 0;
  for (int c = 0; c < static_cast<int>(gt.class_names.size()); ++c) {
    long long num_gt = 0;
    for (const auto& g : gt.items) num_gt += g.class_index == c ? 1 : 0;
    if (num_gt == 0) continue;
    ++classes_with_gt;
    double ap_sum = 0.0, rec_sum = 0.0, ap50 = 0.0;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      // (score, is_tp) in image order, each image's detections by score.
      std::vector<std::pair<double, bool>> all;
      for (const auto& ref : image_order) {
        std::vector<const Detection*> g, d;
        for (const auto& x : gt.items)
          if (x.image_ref == ref && x.class_index == c) g.push_back(&x);
        for (const auto& x : dets.items)
          if (x.image_ref == ref && x.class_index == c) d.push_back(&x);
        std::stable_sort(d.begin(), d.end(), [](auto* a, auto* b) { return a->score > b->score; });
        if (static_cast<int>(d.size()) > max_dets) d.resize(max_dets);
        std::vector<bool> used(g.size(), false);
        for (auto* det : d) {
          int best = -1;
          double best_iou = std::min(thresholds[t], 1.0 - 1e-10);
          for (std::size_t k = 0; k < g.size(); ++k) {
            if (used[k]) continue;
            const double v = ref_iou(*det, *g[k], kind);
            if (v >= best_iou) {
              best_iou = v;
              best = static_cast<int>(k);
            }
          }
          if (best >= 0) used[best] = true;
          all.push_back({det->score, best >= 0});
        }
      }
      std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      std::vector<long long> tp_at(all.size());
      long long tp = 0;
      for (std::size_t k = 0; k < all.size(); ++k) tp_at[k] = (tp += all[k].second ? 1 : 0);
      double ap = 0.0;
      for (int r = 0; r <= 100; ++r) {
        double best = 0.0;
        for (std::size_t k = 0; k < all.size(); ++k) {
          if (tp_at[k] * 100 >= r * num_gt) {
            best = std::max(best, static_cast<double>(tp_at[k]) / static_cast<double>(k + 1));
          }
        }
        ap += best;
      }
      ap /= 101.0;
      if (t == 0) ap50 = ap;
      ap_sum += ap;
      rec_sum += static_cast<double>(tp) / static_cast<double>(num_gt);
    }
    out.map50 += ap50;
    out.map50_95 += ap_sum / thresholds.size();
    out.mar50_95 += rec_sum / thresholds.size();
  }
  if (classes_with_gt > 0) {
    out.map50 /= classes_with_gt;
    out.map50_95 /= classes_with_gt;
    out.mar50_95 /= classes_with_gt;
  }
  return out;
}

RandomScene random_eval_scene(synth::Rng& rng) {
  constexpr int kSide = 16;
  RandomScene s;
  const int num_classes = rng.uniform(1, 2);
  std::vector<std::string> names{"a", "b"};
  names.resize(num_classes);
  s.gt.class_names = s.dets.class_names = names;
  const int num_images = rng.uniform(1, 3);
  for (int i = 0; i < num_images; ++i) {
    const EvalImage im{"img" + std::to_string(i), kSide, kSide};
    s.gt.images.push_back(im);
    s.dets.images.push_back(im);
  }
  auto make = [&](const std::string& ref, int cls, double score, int x, int y, int w, int h) {
    x = std::clamp(x, 0, kSide - 1);
    y = std::clamp(y, 0, kSide - 1);
    w = std::clamp(w, 1, kSide - x);
    h = std::clamp(h, 1, kSide - y);
    Mask m("x", rect_bitmap(kSide, kSide, x, y, w, h));
    if (rng.unit() < 0.3) {
      // Carve a notch so mask and box IoU differ.
      Bitmap b = m.bitmap();
      b.set(y, x, false);
      if (b.count() > 0) m = Mask("x", std::move(b));
    }
    const BBox bb = m.bbox();
    return Detection{ref, cls, score, {double(bb.x), double(bb.y), double(bb.w), double(bb.h)}, m};
  };
  const int n_gt = rng.uniform(0, 6);
  for (int k = 0; k < n_gt; ++k) {
    s.gt.items.push_back(make(s.gt.images[rng.uniform(0, num_images - 1)].ref, rng.uniform(0, num_classes - 1), 1.0,
                              rng.uniform(0, 12), rng.uniform(0, 12), rng.uniform(2, 8), rng.uniform(2, 8)));
  }
  const int n_det = rng.uniform(0, 8);
  for (int k = 0; k < n_det; ++k) {
    const double score = rng.uniform(1, 10) / 10.0;
    if (!s.gt.items.empty() && rng.unit() < 0.65) {
      const Detection& g = s.gt.items[rng.uniform(0, static_cast<int>(s.gt.items.size()) - 1)];
      const int cls = rng.unit() < 0.85 ? g.class_index : rng.uniform(0, num_classes - 1);
      s.dets.items.push_back(make(g.image_ref, cls, score, int(g.box.x) + rng.uniform(-2, 2),
                                  int(g.box.y) + rng.uniform(-2, 2), int(g.box.w) + rng.uniform(-2, 2),
                                  int(g.box.h) + rng.uniform(-2, 2)));
    } else {
      s.dets.items.push_back(make(s.dets.images[rng.uniform(0, num_images - 1)].ref, rng.uniform(0, num_classes - 1),
                                  score, rng.uniform(0, 12), rng.uniform(0, 12), rng.uniform(2, 8), rng.uniform(2, 8)));
    }
  }
  return s;
}

namespace {

bool type_matches(const std::string& type, const json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

}  // namespace

std::string schema_violation(const json& schema, const json& value, const std::string& where) {
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(t.get<std::string>(), value);
    } else {
      for (const auto& alt : t) ok = ok || type_matches(alt.get<std::string>(), value);
    }
    if (!ok) return where + ": expected type " + t.dump() + ", got " + value.dump().substr(0, 60);
  }
  if (schema.contains("enum")) {
    const auto& e = schema["enum"];
    if (std::find(e.begin(), e.end(), value) == e.end()) return where + ": not in enum";
  }
  if (schema.contains("minimum") && value.is_number() && value.get<double>() < schema["minimum"].get<double>()) {
    return where + ": below minimum";
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!value.contains(key.get<std::string>())) return where + ": missing " + key.get<std::string>();
      }
    }
    if (schema.contains("properties")) {
      for (const auto& [key, sub] : schema["properties"].items()) {
        if (!value.contains(key)) continue;
        auto v = schema_violation(sub, value[key], where + "." + key);
        if (!v.empty()) return v;
      }
    }
  }
  if (value.is_array() && schema.contains("items")) {
    for (std::size_t k = 0; k < value.size(); ++k) {
      auto v = schema_violation(schema["items"], value[k], where + "[" + std::to_string(k) + "]");
      if (!v.empty()) return v;
    }
  }
  return {};
}

Dataset golden_dataset() {
  Dataset ds;
  ds.manifest.name = "golden";
  ds.manifest.class_names = {"ripe", "unripe"};
  ds.manifest.splits.train = {"a.png"};
  ds.manifest.splits.val = {"b.png"};

  ImageRecord a{"a.png", 12, 10, {}};
  a.instances.push_back({Mask("a0", rect_bitmap(10, 12, 1, 1, 4, 3), 0.97), 0, 0.31, "a.png"});
  Bitmap l(10, 12);
  for (int r = 4; r < 9; ++r) l.set(r, 6);
  for (int r = 4; r < 9; ++r) l.set(r, 7);
  for (int c = 6; c < 11; ++c) l.set(8, c);
  for (int c = 6; c < 11; ++c) l.set(7, c);
  a.instances.push_back({Mask("a1", l, 0.91), 1, 0.27, "a.png"});
  // Overlaps a0 with a higher similarity; wins the contested pixels.
  a.instances.push_back({Mask("a2", rect_bitmap(10, 12, 3, 2, 3, 3), 0.88), 1, 0.35, "a.png"});
  ImageRecord b{"b.png", 8, 8, {}};
  Bitmap disk(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      if ((r - 3.5) * (r - 3.5) + (c - 3.5) * (c - 3.5) <= 9.0) disk.set(r, c);
  b.instances.push_back({Mask("b0", disk, 0.99), 0, 0.3, "b.png"});
  ds.images = {a, b};
  return ds;
}

fs::path golden_dir() { return SDM_GOLDEN_DIR; }

bool update_golden() {
  const char* v = std::getenv("SDM_UPDATE_GOLDEN");
  return v && std::string(v) == "1";
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

bool same_tree(const fs::path& a, const fs::path& b, const std::vector<std::string>& ignore,
               std::string* difference) {
  auto listing = [&](const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (!e.is_regular_file()) continue;
      const std::string rel = fs::relative(e.path(), root).generic_string();
      if (std::find(ignore.begin(), ignore.end(), e.path().filename().string()) != ignore.end()) continue;
      files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  const auto fa = listing(a), fb = listing(b);
  if (fa != fb) {
    if (difference) *difference = "file lists differ";
    return false;
  }
  for (const auto& f : fa) {
    if (read_bytes(a / f) != read_bytes(b / f)) {
      if (difference) *difference = f;
      return false;
    }
  }
  return true;
}

}  // namespace sdm::testing
