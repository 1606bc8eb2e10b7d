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

#include <cmath>

#include <gtest/gtest.h>

#include "sdm/error.hpp"
#include "sdm/eval.hpp"
#include "support.hpp"

namespace sdm {
namespace {

TEST(AveragePrecision, HandCases) {
  const std::vector<double> s2{0.9, 0.8};
  EXPECT_DOUBLE_EQ(average_precision({false, true}, s2, 1), 0.5);
  EXPECT_DOUBLE_EQ(average_precision({true, true}, s2, 2), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({}, {}, 3), 0.0);
  EXPECT_DOUBLE_EQ(average_precision({true}, std::vector<double>{1.0}, 0), 0.0);
  // Recall 0.5 reached at precision 1: points 0..50 score 1, the rest 0.
  EXPECT_DOUBLE_EQ(average_precision({true, false}, s2, 2), 51.0 / 101.0);
  EXPECT_THROW(average_precision({true}, s2, 1), Error);
}

TEST(BoxIou, Basics) {
  EXPECT_DOUBLE_EQ(box_iou({0, 0, 2, 2}, {1, 0, 2, 2}), 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(box_iou({0, 0, 2, 2}, {2, 0, 2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(box_iou({0, 0, 0, 0}, {0, 0, 0, 0}), 0.0);
}

Detection box_det(double x, double score = 1.0) { return {"i.png", 0, score, {x, 0, 10, 10}, std::nullopt}; }

TEST(MatchGreedy, HigherScoreClaimsFirst) {
  const std::vector<Detection> gts{box_det(0)};
  const std::vector<Detection> dets{box_det(1, 0.9), box_det(0, 0.8)};
  const auto m = match_greedy(gts, dets, 0.5, GeometryKind::Box);
  EXPECT_EQ(m.tp, (std::vector<bool>{true, false}));
  EXPECT_EQ(m.matched_gt, (std::vector<int>{0, -1}));
  const std::vector<Detection> unsorted{box_det(0, 0.1), box_det(0, 0.8)};
  EXPECT_THROW(match_greedy(gts, unsorted, 0.5, GeometryKind::Box), Error);
}

TEST(MatchGreedy, ThresholdIsInclusiveAndBestGtWins) {
  const std::vector<double> ious{0.5, 0.7, 0.5, 0.7};
  const auto m = match_greedy_ious(ious, 2, 2, 0.5);
  EXPECT_EQ(m.matched_gt, (std::vector<int>{1, 0}));
  const auto strict = match_greedy_ious(ious, 2, 2, 0.75);
  EXPECT_EQ(strict.matched_gt, (std::vector<int>{-1, -1}));
}

EvalDataset one_class(std::vector<Detection> items) {
  EvalDataset d{{"c"}, {{"i.png", 100, 100}}, std::move(items)};
  return d;
}

TEST(CocoEval, PerfectAndEmpty) {
  const EvalDataset gt = one_class({box_det(0), box_det(40)});
  const EvalReport perfect = coco_eval(gt, gt, {});
  EXPECT_EQ(perfect.map50, 1.0);
  EXPECT_EQ(perfect.map50_95, 1.0);
  EXPECT_EQ(perfect.mar50_95, 1.0);
  const EvalReport empty = coco_eval(gt, one_class({}), {});
  EXPECT_EQ(empty.map50, 0.0);
  EXPECT_EQ(empty.mar50_95, 0.0);
  EXPECT_EQ(empty.gt_count, 2u);
}

TEST(CocoEval, HandCaseHalf) {
  const EvalDataset gt = one_class({box_det(0)});
  const EvalReport r = coco_eval(gt, one_class({box_det(50, 0.9), box_det(0, 0.8)}), {});
  EXPECT_DOUBLE_EQ(r.map50, 0.5);
  EXPECT_DOUBLE_EQ(r.map50_95, 0.5);
  EXPECT_EQ(r.tp50, 1u);
  EXPECT_EQ(r.fp50, 1u);
}

TEST(CocoEval, MaxDetsKeepsTopScoresPerImage) {
  const EvalDataset gt = one_class({box_det(0)});
  EvalSettings s;
  s.max_dets = 1;
  const EvalReport r = coco_eval(gt, one_class({box_det(50, 0.9), box_det(0, 0.8)}), s);
  EXPECT_EQ(r.map50, 0.0);
}

TEST(CocoEval, MatchesReferenceOnRandomScenes) {
  synth::Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto scene = testing::random_eval_scene(rng);
    for (auto kind : {GeometryKind::Box, GeometryKind::Mask}) {
      const EvalReport r = coco_eval(scene.gt, scene.dets, {kind});
      const auto ref = testing::reference_coco_eval(scene.gt, scene.dets, kind);
      EXPECT_NEAR(r.map50, ref.map50, 1e-9) << trial;
      EXPECT_NEAR(r.map50_95, ref.map50_95, 1e-9) << trial;
      EXPECT_NEAR(r.mar50_95, ref.mar50_95, 1e-9) << trial;
      EXPECT_GE(r.map50 + 1e-12, r.map50_95) << trial;
    }
  }
}

GrayImage gray(int h, int w, std::vector<std::uint8_t> v) { return {h, w, std::move(v)}; }

TEST(VocEval, HandCase) {
  // Ground truth: top half class 1, bottom half class 2. Prediction: all class 1.
  std::vector<std::uint8_t> g(16, 1), p(16, 1);
  for (int k = 8; k < 16; ++k) g[k] = 2;
  const std::vector<GrayImage> gts{gray(4, 4, g)}, preds{gray(4, 4, p)};
  const auto r = voc_eval(gts, preds, 2);
  EXPECT_DOUBLE_EQ(r.miou, 0.25);
  EXPECT_DOUBLE_EQ(r.class_accuracy_mean, 0.5);
  EXPECT_DOUBLE_EQ(r.fwiou, 0.25);
  EXPECT_TRUE(std::isnan(r.class_iou[0]));
  EXPECT_EQ(r.at(2, 1), 8u);
  EXPECT_EQ(r.total, 16u);
}

TEST(VocEval, BackgroundExcludedFromMeansUnlessAsked) {
  const std::vector<GrayImage> gts{gray(1, 4, {0, 0, 1, 1})}, preds{gray(1, 4, {0, 1, 1, 1})};
  const auto r = voc_eval(gts, preds, 1);
  EXPECT_DOUBLE_EQ(r.miou, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.fwiou, 0.5 * 0.5 + 0.5 * 2.0 / 3.0);
  const auto with_bg = voc_eval(gts, preds, 1, {true});
  EXPECT_DOUBLE_EQ(with_bg.miou, (0.5 + 2.0 / 3.0) / 2.0);
  EXPECT_DOUBLE_EQ(with_bg.class_accuracy_mean, (0.5 + 1.0) / 2.0);
}

TEST(VocEval, RandomTallyMatchesDirectCount) {
  synth::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = rng.uniform(1, 4);
    std::vector<GrayImage> gts, preds;
    std::vector<std::uint64_t> inter(k + 1, 0), gt_n(k + 1, 0), pr_n(k + 1, 0);
    for (int i = 0, n = rng.uniform(1, 3); i < n; ++i) {
      const int h = rng.uniform(1, 9), w = rng.uniform(1, 9);
      GrayImage g{h, w, {}}, p{h, w, {}};
      for (int px = 0; px < h * w; ++px) {
        const auto a = static_cast<std::uint8_t>(rng.uniform(0, static_cast<int>(k)));
        const auto b = static_cast<std::uint8_t>(rng.uniform(0, static_cast<int>(k)));
        g.values.push_back(a);
        p.values.push_back(b);
        ++gt_n[a];
        ++pr_n[b];
        if (a == b) ++inter[a];
      }
      gts.push_back(g);
      preds.push_back(p);
    }
    const auto r = voc_eval(gts, preds, k);
    double sum = 0.0;
    int cnt = 0;
    for (std::size_t c = 1; c <= k; ++c) {
      const auto uni = gt_n[c] + pr_n[c] - inter[c];
      if (uni == 0) continue;
      sum += static_cast<double>(inter[c]) / static_cast<double>(uni);
      ++cnt;
    }
    EXPECT_NEAR(r.miou, cnt ? sum / cnt : 0.0, 1e-12) << trial;
  }
}

TEST(VocEval, RejectsBadInput) {
  const std::vector<GrayImage> a{gray(1, 2, {0, 1})}, b{gray(2, 1, {0, 1})}, c{gray(1, 2, {0, 7})};
  EXPECT_THROW(voc_eval(a, b, 1), Error);
  EXPECT_THROW(voc_eval(a, c, 1), Error);
  EXPECT_THROW(voc_eval(a, std::vector<GrayImage>{}, 1), Error);
}

TEST(EvalDataset, FromDatasetUsesSimilarityAsScore) {
  const Dataset ds = testing::golden_dataset();
  const EvalDataset e = eval_dataset_from_dataset(ds, GeometryKind::Mask);
  ASSERT_EQ(e.items.size(), 4u);
  EXPECT_DOUBLE_EQ(e.items[0].score, 0.31);
  EXPECT_TRUE(e.items[0].mask.has_value());
  EXPECT_EQ(e.class_names, ds.manifest.class_names);
}

TEST(EvalDataset, CrowdAnnotationsAreRejected) {
  const nlohmann::json doc = {
      {"images", {{{"id", 1}, {"file_name", "i.png"}, {"width", 4}, {"height", 4}}}},
      {"categories", {{{"id", 1}, {"name", "c"}}}},
      {"annotations", {{{"id", 7}, {"image_id", 1}, {"category_id", 1}, {"bbox", {0, 0, 2, 2}}, {"area", 4},
                        {"iscrowd", 1}, {"segmentation", {{0, 0, 2, 0, 2, 2}}}}}}};
  try {
    parse_coco(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("iscrowd"), std::string::npos);
  }
}

}  // namespace
}  // namespace sdm
