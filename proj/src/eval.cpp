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

#include "sdm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "sdm/error.hpp"

namespace sdm {

using nlohmann::json;

std::string_view geometry_kind_name(GeometryKind kind) noexcept {
  return kind == GeometryKind::Box ? "box" : "mask";
}

double box_iou(const BoxF& a, const BoxF& b) noexcept {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  if (iw <= 0) return 0.0;
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double geometry_iou(const Detection& a, const Detection& b, GeometryKind kind) {
  if (kind == GeometryKind::Box) return box_iou(a.box, b.box);
  if (!a.mask || !b.mask) throw Error(ErrorCode::InvalidArgument, "mask evaluation needs masks");
  return overlap_stats(*a.mask, *b.mask).iou;
}

MatchResult match_greedy_ious(std::span<const double> ious, std::size_t num_dets,
                              std::size_t num_gts, double iou_threshold) {
  MatchResult out{std::vector<bool>(num_dets, false), std::vector<int>(num_dets, -1)};
  std::vector<bool> taken(num_gts, false);
  const double floor = std::min(iou_threshold, 1.0 - 1e-10);
  for (std::size_t d = 0; d < num_dets; ++d) {
    double best = floor;
    int m = -1;
    for (std::size_t g = 0; g < num_gts; ++g) {
      if (taken[g]) continue;
      const double v = ious[d * num_gts + g];
      if (v < best) continue;
      best = v;
      m = static_cast<int>(g);
    }
    if (m >= 0) {
      taken[m] = true;
      out.tp[d] = true;
      out.matched_gt[d] = m;
    }
  }
  return out;
}

MatchResult match_greedy(std::span<const Detection> gts, std::span<const Detection> dets,
                         double iou_threshold, GeometryKind kind) {
  for (std::size_t d = 1; d < dets.size(); ++d) {
    if (dets[d].score > dets[d - 1].score) {
      throw Error(ErrorCode::UnsortedInput, "detections must be sorted by descending score");
    }
  }
  std::vector<double> ious(dets.size() * gts.size());
  for (std::size_t d = 0; d < dets.size(); ++d) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      ious[d * gts.size() + g] = geometry_iou(dets[d], gts[g], kind);
    }
  }
  return match_greedy_ious(ious, dets.size(), gts.size(), iou_threshold);
}

double average_precision(const std::vector<bool>& tp_flags, std::span<const double> scores,
                         std::size_t num_gt) {
  if (scores.size() != tp_flags.size()) {
    throw Error(ErrorCode::InvalidArgument, "tp flags and scores differ in length");
  }
  if (num_gt == 0 || tp_flags.empty()) return 0.0;
  const std::size_t n = tp_flags.size();
  std::vector<std::size_t> tp_cum(n);
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += tp_flags[k] ? 1 : 0;
    tp_cum[k] = tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  for (std::size_t k = n - 1; k > 0; --k) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double sum = 0.0;
  std::size_t k = 0;
  for (int i = 0; i < kRecallPoints; ++i) {
    // First detection whose recall tp/num_gt reaches i/100, in exact arithmetic.
    while (k < n && tp_cum[k] * 100 < static_cast<std::size_t>(i) * num_gt) ++k;
    if (k == n) break;
    sum += precision[k];
  }
  return sum / kRecallPoints;
}

std::vector<double> EvalSettings::default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

namespace {

struct Bucket {
  std::vector<std::size_t> gts;
  std::vector<std::size_t> dets;
};

}  // namespace

EvalReport coco_eval(const EvalDataset& gt, const EvalDataset& dets, const EvalSettings& settings) {
  if (gt.class_names != dets.class_names) {
    throw Error(ErrorCode::ClassListMismatch, "ground truth and predictions differ in classes");
  }
  const std::size_t num_classes = gt.class_names.size();
  const std::size_t num_t = settings.iou_thresholds.size();

  // (image, class) buckets in image order of the ground truth.
  std::map<std::string, std::size_t> image_index;
  for (const auto& img : gt.images) image_index.emplace(img.ref, image_index.size());
  for (const auto& img : dets.images) image_index.emplace(img.ref, image_index.size());
  auto image_of = [&](const std::string& ref) {
    auto it = image_index.find(ref);
    if (it == image_index.end()) it = image_index.emplace(ref, image_index.size()).first;
    return it->second;
  };
  std::map<std::pair<std::size_t, int>, Bucket> buckets;
  std::vector<std::size_t> num_gt(num_classes, 0);
  for (std::size_t k = 0; k < gt.items.size(); ++k) {
    const auto& g = gt.items[k];
    if (g.class_index < 0 || static_cast<std::size_t>(g.class_index) >= num_classes) {
      throw Error(ErrorCode::ValueOutOfRange, "ground truth class out of range");
    }
    buckets[{image_of(g.image_ref), g.class_index}].gts.push_back(k);
    ++num_gt[g.class_index];
  }
  for (std::size_t k = 0; k < dets.items.size(); ++k) {
    const auto& d = dets.items[k];
    if (d.class_index < 0 || static_cast<std::size_t>(d.class_index) >= num_classes) {
      throw Error(ErrorCode::ValueOutOfRange, "detection class out of range");
    }
    buckets[{image_of(d.image_ref), d.class_index}].dets.push_back(k);
  }

  // Per class, in bucket (image) order: score and tp flag per threshold.
  struct Scored {
    double score;
    std::vector<bool> tp;
  };
  std::vector<std::vector<Scored>> per_class(num_classes);
  for (auto& [key, bucket] : buckets) {
    auto& dlist = bucket.dets;
    std::stable_sort(dlist.begin(), dlist.end(), [&](std::size_t a, std::size_t b) {
      return dets.items[a].score > dets.items[b].score;
    });
    if (static_cast<int>(dlist.size()) > settings.max_dets) dlist.resize(settings.max_dets);
    const std::size_t nd = dlist.size(), ng = bucket.gts.size();
    std::vector<double> ious(nd * ng);
    for (std::size_t d = 0; d < nd; ++d) {
      for (std::size_t g = 0; g < ng; ++g) {
        ious[d * ng + g] =
            geometry_iou(dets.items[dlist[d]], gt.items[bucket.gts[g]], settings.kind);
      }
    }
    std::vector<Scored> scored(nd);
    for (std::size_t d = 0; d < nd; ++d) scored[d] = {dets.items[dlist[d]].score, std::vector<bool>(num_t)};
    for (std::size_t t = 0; t < num_t; ++t) {
      const auto m = match_greedy_ious(ious, nd, ng, settings.iou_thresholds[t]);
      for (std::size_t d = 0; d < nd; ++d) scored[d].tp[t] = m.tp[d];
    }
    auto& dst = per_class[key.second];
    dst.insert(dst.end(), scored.begin(), scored.end());
  }

  EvalReport report;
  report.kind = settings.kind;
  report.settings = settings;
  report.det_count = dets.items.size();
  report.gt_count = gt.items.size();
  const auto t50 = std::find(settings.iou_thresholds.begin(), settings.iou_thresholds.end(), 0.5);
  const std::size_t i50 = t50 == settings.iou_thresholds.end()
                              ? 0
                              : static_cast<std::size_t>(t50 - settings.iou_thresholds.begin());
  double sum50 = 0.0, sum_all = 0.0, sum_rec = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (num_gt[c] == 0) continue;
    auto& list = per_class[c];
    std::stable_sort(list.begin(), list.end(),
                     [](const Scored& a, const Scored& b) { return a.score > b.score; });
    ClassMetrics cm{gt.class_names[c], num_gt[c], list.size(), {}, {}};
    std::vector<double> scores(list.size());
    for (std::size_t k = 0; k < list.size(); ++k) scores[k] = list[k].score;
    for (std::size_t t = 0; t < num_t; ++t) {
      std::vector<bool> flags(list.size());
      std::size_t tp = 0;
      for (std::size_t k = 0; k < list.size(); ++k) {
        flags[k] = list[k].tp[t];
        tp += flags[k] ? 1 : 0;
      }
      cm.ap.push_back(average_precision(flags, scores, num_gt[c]));
      cm.recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt[c]));
      if (t == i50) {
        report.tp50 += tp;
        report.fp50 += list.size() - tp;
      }
    }
    sum50 += cm.ap[i50];
    sum_all += std::accumulate(cm.ap.begin(), cm.ap.end(), 0.0) / static_cast<double>(num_t);
    sum_rec += std::accumulate(cm.recall.begin(), cm.recall.end(), 0.0) / static_cast<double>(num_t);
    report.per_class.push_back(std::move(cm));
  }
  if (!report.per_class.empty()) {
    const double n = static_cast<double>(report.per_class.size());
    report.map50 = sum50 / n;
    report.map50_95 = sum_all / n;
    report.mar50_95 = sum_rec / n;
  }
  return report;
}

namespace {

BoxF box_from(const std::array<double, 4>& b) { return {b[0], b[1], b[2], b[3]}; }

}  // namespace

EvalDataset eval_dataset_from_coco(const CocoDocument& doc, GeometryKind kind,
                                   const CocoDocument* gt_doc) {
  const CocoDocument& meta = doc.results_only ? *gt_doc : doc;
  if (doc.results_only && !gt_doc) {
    throw Error(ErrorCode::InvalidArgument, "a results list needs the ground-truth document");
  }
  EvalDataset out;
  std::map<std::int64_t, int> class_of;
  for (const auto& cat : meta.categories) {
    class_of[cat.id] = static_cast<int>(out.class_names.size());
    out.class_names.push_back(cat.name);
  }
  std::map<std::int64_t, std::size_t> image_of;
  for (const auto& img : meta.images) {
    image_of[img.id] = out.images.size();
    out.images.push_back({img.file_name, img.width, img.height});
  }
  for (const auto& ann : doc.annotations) {
    const auto img = image_of.find(ann.image_id);
    if (img == image_of.end()) {
      throw Error(ErrorCode::UnknownImage, "annotation references image " + std::to_string(ann.image_id));
    }
    const auto cls = class_of.find(ann.category_id);
    if (cls == class_of.end()) {
      throw Error(ErrorCode::ClassListMismatch, "unknown category " + std::to_string(ann.category_id));
    }
    const EvalImage& im = out.images[img->second];
    Detection d{im.ref, cls->second, ann.score.value_or(1.0), box_from(ann.bbox), std::nullopt};
    if (kind == GeometryKind::Mask) d.mask = annotation_mask(ann, im.height, im.width);
    out.items.push_back(std::move(d));
  }
  return out;
}

EvalDataset eval_dataset_from_dataset(const Dataset& ds, GeometryKind kind) {
  EvalDataset out;
  out.class_names = ds.manifest.class_names;
  for (const auto& img : ds.images) {
    out.images.push_back({img.ref, img.width, img.height});
    for (const auto& inst : img.instances) {
      const BBox& b = inst.mask.bbox();
      Detection d{img.ref, inst.class_index, inst.similarity,
                  {static_cast<double>(b.x), static_cast<double>(b.y), static_cast<double>(b.w),
                   static_cast<double>(b.h)},
                  std::nullopt};
      if (kind == GeometryKind::Mask) d.mask = inst.mask;
      out.items.push_back(std::move(d));
    }
  }
  return out;
}

json report_to_json(const EvalReport& r) {
  json classes = json::array();
  for (const auto& c : r.per_class) {
    classes.push_back({{"name", c.name},
                       {"num_gt", c.num_gt},
                       {"num_dets", c.num_dets},
                       {"ap", c.ap},
                       {"recall", c.recall}});
  }
  return {{"kind", geometry_kind_name(r.kind)},
          {"mAP50", r.map50},
          {"mAP50_95", r.map50_95},
          {"mAR50_95", r.mar50_95},
          {"counts", {{"gt", r.gt_count}, {"dets", r.det_count}, {"tp50", r.tp50}, {"fp50", r.fp50}}},
          {"per_class", std::move(classes)},
          {"settings",
           {{"iou_thresholds", r.settings.iou_thresholds},
            {"max_dets", r.settings.max_dets},
            {"recall_points", kRecallPoints}}}};
}

std::string report_table(const EvalReport& r) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %8s %8s %8s %6s %6s\n", "class", "AP50", "AP50:95",
                "AR50:95", "gt", "dets");
  out += line;
  for (const auto& c : r.per_class) {
    const double ap = std::accumulate(c.ap.begin(), c.ap.end(), 0.0) / c.ap.size();
    const double ar = std::accumulate(c.recall.begin(), c.recall.end(), 0.0) / c.recall.size();
    std::snprintf(line, sizeof(line), "%-24s %8.4f %8.4f %8.4f %6zu %6zu\n", c.name.c_str(),
                  c.ap.front(), ap, ar, c.num_gt, c.num_dets);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-24s %8.4f %8.4f %8.4f %6zu %6zu\n",
                (std::string("all (") + std::string(geometry_kind_name(r.kind)) + ")").c_str(),
                r.map50, r.map50_95, r.mar50_95, r.gt_count, r.det_count);
  out += line;
  return out;
}

SemanticReport voc_eval(std::span<const GrayImage> gt_maps, std::span<const GrayImage> pred_maps,
                        std::size_t num_classes, const VocOptions& options) {
  if (gt_maps.size() != pred_maps.size()) {
    throw Error(ErrorCode::SizeMismatch, "ground truth and prediction map counts differ");
  }
  const std::size_t k1 = num_classes + 1;
  SemanticReport r;
  r.num_classes = num_classes;
  r.confusion.assign(k1 * k1, 0);
  for (std::size_t i = 0; i < gt_maps.size(); ++i) {
    const auto& g = gt_maps[i];
    const auto& p = pred_maps[i];
    if (g.height != p.height || g.width != p.width || g.values.size() != p.values.size()) {
      throw Error(ErrorCode::SizeMismatch, "map " + std::to_string(i) + " sizes differ");
    }
    for (std::size_t k = 0; k < g.values.size(); ++k) {
      if (g.values[k] > num_classes || p.values[k] > num_classes) {
        throw Error(ErrorCode::ValueOutOfRange, "map " + std::to_string(i) + " has value " +
                                                    std::to_string(std::max(g.values[k], p.values[k])));
      }
      ++r.confusion[g.values[k] * k1 + p.values[k]];
    }
  }
  std::vector<std::uint64_t> row(k1, 0), col(k1, 0);
  for (std::size_t a = 0; a < k1; ++a) {
    for (std::size_t b = 0; b < k1; ++b) {
      row[a] += r.confusion[a * k1 + b];
      col[b] += r.confusion[a * k1 + b];
      r.total += r.confusion[a * k1 + b];
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.class_iou.assign(k1, nan);
  r.class_accuracy.assign(k1, nan);
  double acc_sum = 0.0, iou_sum = 0.0;
  std::size_t acc_n = 0, iou_n = 0;
  for (std::size_t k = 0; k < k1; ++k) {
    const auto diag = static_cast<double>(r.confusion[k * k1 + k]);
    const auto uni = static_cast<double>(row[k] + col[k]) - diag;
    if (uni > 0) r.class_iou[k] = diag / uni;
    if (row[k] > 0) r.class_accuracy[k] = diag / static_cast<double>(row[k]);
    if (r.total > 0 && uni > 0) r.fwiou += static_cast<double>(row[k]) / r.total * r.class_iou[k];
    if (k == 0 && !options.include_background) continue;
    if (row[k] > 0) {
      acc_sum += r.class_accuracy[k];
      ++acc_n;
    }
    if (uni > 0) {
      iou_sum += r.class_iou[k];
      ++iou_n;
    }
  }
  r.class_accuracy_mean = acc_n ? acc_sum / acc_n : 0.0;
  r.miou = iou_n ? iou_sum / iou_n : 0.0;
  return r;
}

json semantic_report_to_json(const SemanticReport& r) {
  auto finite_or_null = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json iou = json::array(), acc = json::array();
  for (std::size_t k = 0; k <= r.num_classes; ++k) {
    iou.push_back(finite_or_null(r.class_iou[k]));
    acc.push_back(finite_or_null(r.class_accuracy[k]));
  }
  return {{"class_accuracy", r.class_accuracy_mean},
          {"mIoU", r.miou},
          {"FWIoU", r.fwiou},
          {"pixels", r.total},
          {"per_class_iou", std::move(iou)},
          {"per_class_accuracy", std::move(acc)},
          {"confusion", r.confusion}};
}

std::string semantic_report_table(const SemanticReport& r) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof(line), "%-12s %10s %10s\n", "class", "IoU", "accuracy");
  out += line;
  for (std::size_t k = 0; k <= r.num_classes; ++k) {
    std::snprintf(line, sizeof(line), "%-12zu %10.4f %10.4f\n", k, r.class_iou[k], r.class_accuracy[k]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "ClassAcc %.4f  mIoU %.4f  FWIoU %.4f\n", r.class_accuracy_mean,
                r.miou, r.fwiou);
  out += line;
  return out;
}

}  // namespace sdm
