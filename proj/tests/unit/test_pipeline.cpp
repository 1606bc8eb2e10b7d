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

#include <fstream>

#include <gtest/gtest.h>

#include "sdm/error.hpp"
#include "sdm/eval.hpp"
#include "sdm/image.hpp"
#include "sdm/pipeline.hpp"
#include "support.hpp"

namespace sdm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Fixture {
  testing::TempDir dir{"sdm-pipe"};
  synth::Corpus corpus;

  explicit Fixture(int n, std::uint64_t seed = 11) : corpus(synth::write_corpus(dir.path(), n, seed)) {}

  PipelineConfig config(const std::string& out, bool duplicates = false) const {
    PipelineConfig c;
    c.images_dir = corpus.images_dir;
    c.prompts = corpus.prompts;
    c.segments.adapter = testing::stub_segmenter(duplicates);
    c.embeddings.adapter = testing::stub_embedder();
    c.grid.points_per_side = 16;
    c.exports.formats = {"coco", "yolo-seg", "yolo-det", "voc"};
    c.exports.out_dir = dir / out;
    c.gt = corpus.ground_truth;
    return c;
  }
};

json read_json(const fs::path& p) { return json::parse(testing::read_text(p)); }

TEST(Pipeline, SyntheticRunRecoversGroundTruth) {
  Fixture fx(10);
  const RunRecord rec = run_pipeline(fx.config("out"));
  EXPECT_EQ(rec.successes(), 10u);
  const json summary = read_json(fx.dir / "out/eval/summary.json");
  EXPECT_GE(summary["box"]["map50"].get<double>(), 0.95);
  EXPECT_GE(summary["mask"]["map50"].get<double>(), 0.95);
  for (const char* f : {"coco/instances.json", "yolo-seg/data.yaml", "yolo-det/data.yaml", "voc/scene_0000.png",
                        "manifest.json", "artifacts/assignments.json", "run_record.json"}) {
    EXPECT_TRUE(fs::exists(fx.dir / "out" / f)) << f;
  }
  const json manifest = read_json(fx.dir / "out/manifest.json");
  EXPECT_EQ(manifest["classes"], json({"strawberry", "blueberry"}));
  EXPECT_EQ(manifest["provenance"]["config_digest"], rec.config_digest);
}

TEST(Pipeline, ExportRoundTripsThroughEvaluation) {
  Fixture fx(4);
  run_pipeline(fx.config("out"));
  const CocoDocument doc = load_coco_document(fx.dir / "out/coco/instances.json");
  for (auto kind : {GeometryKind::Box, GeometryKind::Mask}) {
    const EvalDataset self = eval_dataset_from_coco(doc, kind);
    EXPECT_EQ(coco_eval(self, self, {kind}).map50_95, 1.0);
  }
}

TEST(Pipeline, CorruptSegmentsFileFailsOnlyThatImage) {
  Fixture fx(10);
  const fs::path segs = fx.dir / "segs";
  fs::create_directories(segs);
  for (const auto& ref : fx.corpus.refs) {
    const RgbImage img = read_png_rgb(fx.corpus.images_dir / ref);
    GridPromptSpec grid{16, 3};
    save_segments(run_segmenter_adapter(testing::stub_segmenter(), fx.corpus.images_dir / ref, img.width(),
                                        img.height(), grid, fx.dir.path()),
                  segs / (fs::path(ref).stem().string() + ".json"));
  }
  testing::write_text(segs / "scene_0003.json", "{\"image\": \"scene_0003.png\", \"segments\": [");
  PipelineConfig c = fx.config("out");
  c.segments = {segs, ""};
  const RunRecord rec = run_pipeline(c);
  EXPECT_EQ(rec.successes(), 9u);
  ASSERT_EQ(rec.failures(), 1u);
  const auto bad = std::find_if(rec.images.begin(), rec.images.end(), [](const ImageRun& r) { return !r.ok; });
  EXPECT_EQ(bad->image, "scene_0003.png");
  EXPECT_NE(bad->error.find("scene_0003.json"), std::string::npos) << bad->error;
  const json record = read_json(fx.dir / "out/run_record.json");
  EXPECT_EQ(record["images"].size(), 10u);
}

TEST(Pipeline, EmptyImageDirectory) {
  testing::TempDir dir;
  fs::create_directories(dir / "images");
  synth::Corpus corpus = synth::write_corpus(dir / "c", 1, 1);
  PipelineConfig c;
  c.images_dir = dir / "images";
  c.prompts = corpus.prompts;
  c.segments.adapter = testing::stub_segmenter();
  c.embeddings.adapter = testing::stub_embedder();
  c.exports.out_dir = dir / "out";
  const RunRecord rec = run_pipeline(c);
  EXPECT_TRUE(rec.images.empty());
  EXPECT_EQ(rec.successes(), 0u);
  EXPECT_THROW(bench(c, 1), Error);
  c.images_dir = dir / "missing";
  EXPECT_THROW(run_pipeline(c), Error);
}

TEST(Pipeline, DeterministicAcrossWorkerCounts) {
  Fixture fx(6);
  run_pipeline(fx.config("w1"));
  PipelineConfig c4 = fx.config("w4");
  c4.workers = 4;
  run_pipeline(c4);
  std::string diff;
  EXPECT_TRUE(testing::same_tree(fx.dir / "w1", fx.dir / "w4", {"run_record.json"}, &diff)) << diff;
}

TEST(Pipeline, CacheReplayIsByteIdentical) {
  Fixture fx(4);
  run_pipeline(fx.config("base"));
  PipelineConfig c = fx.config("cold");
  c.cache_dir = fx.dir / "cache";
  const RunRecord cold = run_pipeline(c);
  EXPECT_EQ(cold.stats.segment_calls, 4u);
  c.exports.out_dir = fx.dir / "warm";
  const RunRecord warm = run_pipeline(c);
  EXPECT_EQ(warm.stats.segment_calls, 0u);
  EXPECT_EQ(warm.stats.segment_cache_hits, 4u);
  EXPECT_EQ(warm.stats.crop_embed_calls, 0u);
  EXPECT_EQ(warm.stats.text_embed_calls, 0u);
  std::string diff;
  EXPECT_TRUE(testing::same_tree(fx.dir / "base", fx.dir / "cold", {"run_record.json"}, &diff)) << diff;
  EXPECT_TRUE(testing::same_tree(fx.dir / "base", fx.dir / "warm", {"run_record.json"}, &diff)) << diff;
}

TEST(Pipeline, NmsAblationOnDuplicatedMasks) {
  Fixture fx(6);
  run_pipeline(fx.config("ab", true), {true});
  const json with = read_json(fx.dir / "ab/with-nms/eval/summary.json");
  const json without = read_json(fx.dir / "ab/without-nms/eval/summary.json");
  EXPECT_GE(with["mask"]["map50"].get<double>(), 0.95);
  EXPECT_LT(without["mask"]["map50_95"].get<double>(), with["mask"]["map50_95"].get<double>());
  const json m = read_json(fx.dir / "ab/without-nms/manifest.json");
  EXPECT_EQ(m["provenance"]["nms"]["enabled"], false);
}

TEST(Pipeline, FlagsImagesWithoutLabels) {
  Fixture fx(2);
  PipelineConfig c = fx.config("out");
  c.similarity_floor = FloorConfig{2.0, "leaf"};
  const RunRecord rec = run_pipeline(c);
  ASSERT_EQ(rec.successes(), 2u);
  for (const auto& r : rec.images) {
    EXPECT_NE(std::find(r.flags.begin(), r.flags.end(), "no-labels"), r.flags.end());
    EXPECT_NE(std::find(r.flags.begin(), r.flags.end(), "below-floor"), r.flags.end());
  }
}

TEST(Bench, SummarizesSingleRepeat) {
  Fixture fx(2);
  PipelineConfig c = fx.config("b");
  c.gt.clear();
  const BenchSummary s = bench(c, 1);
  EXPECT_EQ(s.repeats, 1);
  EXPECT_EQ(s.images, 2u);
  ASSERT_FALSE(s.stages.empty());
  for (const auto& st : s.stages) {
    EXPECT_EQ(st.mean_ms, st.median_ms) << st.stage;
    EXPECT_EQ(st.mean_ms, st.p95_ms) << st.stage;
  }
  EXPECT_TRUE(s.to_json().contains("stages"));
}

TEST(Config, JsonRoundTripAndRelativePaths) {
  const json doc = {{"images_dir", "imgs"},
                    {"prompts", "p.json"},
                    {"segments", {{"dir", "segs"}}},
                    {"embeddings", {{"adapter", "emb --fast"}}},
                    {"nms", {{"threshold", 0.8}}},
                    {"export", {{"formats", {"coco", "voc"}}, {"out_dir", "out"}}},
                    {"workers", 3}};
  const PipelineConfig c = config_from_json(doc, "/base");
  EXPECT_EQ(c.images_dir, fs::path("/base/imgs"));
  EXPECT_EQ(c.segments.dir, fs::path("/base/segs"));
  EXPECT_EQ(c.embeddings.adapter, "emb --fast");
  EXPECT_DOUBLE_EQ(c.nms.threshold, 0.8);
  EXPECT_EQ(c.workers, 3);
  const PipelineConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(testing::schema_violation(config_schema(), config_to_json(c)), "");

  PipelineConfig other = back;
  other.workers = 1;
  other.exports.out_dir = "/elsewhere";
  EXPECT_EQ(config_digest(other), config_digest(c));
  other.nms.threshold = 0.7;
  EXPECT_NE(config_digest(other), config_digest(c));
}

TEST(Config, ValidationErrors) {
  const json good = {{"images_dir", "i"}, {"prompts", "p"}, {"segments", {{"dir", "s"}}},
                     {"embeddings", {{"dir", "e"}}}};
  EXPECT_NO_THROW(config_from_json(good).validate());
  auto expect_config_error = [](const json& doc) {
    try {
      config_from_json(doc).validate();
      ADD_FAILURE() << doc.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError) << doc.dump();
    }
  };
  json d = good;
  d["segments"] = {{"dir", "s"}, {"adapter", "x"}};
  expect_config_error(d);
  d = good;
  d.erase("prompts");
  expect_config_error(d);
  d = good;
  d["export"] = {{"formats", {"pascal"}}};
  expect_config_error(d);
  d = good;
  d["nms"] = {{"threshold", 1.5}};
  expect_config_error(d);
  d = good;
  d["workers"] = 0;
  expect_config_error(d);
  d = good;
  d["export"] = {{"val_fraction", 0.7}, {"test_fraction", 0.5}};
  expect_config_error(d);
  d = good;
  d["workers"] = "many";
  expect_config_error(d);
}

}  // namespace
}  // namespace sdm
