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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/crop.hpp"
#include "sdm/dataset.hpp"
#include "sdm/embedder.hpp"
#include "sdm/export.hpp"
#include "sdm/nms.hpp"
#include "sdm/polygon.hpp"
#include "sdm/prompt.hpp"
#include "sdm/segments.hpp"
#include "sdm/similarity.hpp"

namespace sdm {

inline constexpr const char* kEngineVersion = "0.1.0";
inline constexpr const char* kCacheDirEnv = "SDM_CACHE_DIR";

// Exactly one of `dir` / `adapter` is set.
struct SourceConfig {
  std::filesystem::path dir;
  std::string adapter;
};

struct ExportConfig {
  std::vector<std::string> formats{"coco"};
  std::filesystem::path out_dir;
  std::string name = "sdm";
  PolygonOptions polygons;
  double val_fraction = 0.0;
  double test_fraction = 0.0;
  bool copy_images = false;
};

struct FloorConfig {
  double value = 0.0;
  std::string label;
};

struct PipelineConfig {
  std::filesystem::path images_dir;
  std::filesystem::path prompts;
  SourceConfig segments;
  SourceConfig embeddings;
  GridPromptSpec grid;
  bool nms_enabled = true;
  NmsConfig nms;
  CropMode crop_mode = CropMode::MaskedBBox;
  int embed_resolution = kDefaultEmbedResolution;
  ExportConfig exports;
  std::optional<FloorConfig> similarity_floor;
  int workers = 1;
  std::filesystem::path cache_dir;
  std::uint64_t seed = 0;
  std::filesystem::path gt;

  // Throws ConfigError.
  void validate() const;
};

inline const std::vector<std::string>& known_formats() {
  static const std::vector<std::string> formats{"coco", "yolo-seg", "yolo-det", "voc"};
  return formats;
}

// Relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const PipelineConfig& config);
nlohmann::json config_schema();
// Digest over result-relevant fields (not workers, output or cache dirs).
std::string config_digest(const PipelineConfig& config);

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::string identity() const = 0;
  virtual bool cacheable() const { return true; }
  virtual SegmentSet segment(const std::filesystem::path& image_path, int width, int height,
                             const GridPromptSpec& grid) = 0;
};

// Reads <dir>/<image stem>.json.
class PrecomputedSegmenter final : public Segmenter {
 public:
  explicit PrecomputedSegmenter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string identity() const override { return "dir:" + dir_.string(); }
  bool cacheable() const override { return false; }
  SegmentSet segment(const std::filesystem::path& image_path, int width, int height,
                     const GridPromptSpec& grid) override;

 private:
  std::filesystem::path dir_;
};

class AdapterSegmenter final : public Segmenter {
 public:
  AdapterSegmenter(std::string command, std::filesystem::path work_dir = {})
      : command_(std::move(command)), work_dir_(std::move(work_dir)) {}
  std::string identity() const override { return "adapter:" + command_; }
  SegmentSet segment(const std::filesystem::path& image_path, int width, int height,
                     const GridPromptSpec& grid) override {
    return run_segmenter_adapter(command_, image_path, width, height, grid, work_dir_);
  }

 private:
  std::string command_;
  std::filesystem::path work_dir_;
};

// Segment and prompt embeddings for one image at a time.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual std::string identity() const = 0;
  virtual bool cacheable() const { return true; }
  virtual EmbeddingBlock segments(const std::string& image_ref,
                                  std::span<const SegmentCrop> crops) = 0;
  // Item ids are prompt labels.
  virtual EmbeddingBlock texts(std::span<const TextItem> items) = 0;
};

class AdapterEmbeddingSource final : public EmbeddingSource {
 public:
  explicit AdapterEmbeddingSource(std::unique_ptr<Embedder> embedder)
      : embedder_(std::move(embedder)) {}
  std::string identity() const override { return embedder_->identity(); }
  EmbeddingBlock segments(const std::string&, std::span<const SegmentCrop> crops) override {
    return embedder_->embed_crops(crops);
  }
  EmbeddingBlock texts(std::span<const TextItem> items) override {
    return embedder_->embed_texts(items);
  }

 private:
  std::unique_ptr<Embedder> embedder_;
};

// <dir>/<image stem>.embeddings keyed by segment id; <dir>/prompts.embeddings
// keyed by prompt label.
class PrecomputedEmbeddingSource final : public EmbeddingSource {
 public:
  explicit PrecomputedEmbeddingSource(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string identity() const override { return "dir:" + dir_.string(); }
  bool cacheable() const override { return false; }
  EmbeddingBlock segments(const std::string& image_ref, std::span<const SegmentCrop> crops) override;
  EmbeddingBlock texts(std::span<const TextItem> items) override;

 private:
  std::filesystem::path dir_;
};

struct StageTimings {
  double load_ms = 0.0;
  double segment_ms = 0.0;
  double nms_ms = 0.0;
  double crop_ms = 0.0;
  double embed_ms = 0.0;
  double match_ms = 0.0;
};

// Ingested, suppressed and embedded masks of one image; prompt independent.
struct PreparedImage {
  std::string ref;
  int width = 0;
  int height = 0;
  std::size_t raw_count = 0;
  std::vector<Mask> candidates;  // after the min-area filter
  NmsOutcome nms;
  std::vector<Mask> matched;  // kept non-empty masks (every candidate with match_all)
  EmbeddingBlock embeddings;  // row-normalized, one row per matched mask
  StageTimings timings;
};

struct MatchedImage {
  SimilarityMatrix matrix;
  std::vector<Assignment> assignments;
};

struct EngineStats {
  std::size_t segment_calls = 0;
  std::size_t segment_cache_hits = 0;
  std::size_t crop_embed_calls = 0;
  std::size_t crop_cache_hits = 0;
  std::size_t text_embed_calls = 0;
};

// Shared by the batch pipeline and the workbench. prepare() is safe to call
// from several threads at once.
class Engine {
 public:
  explicit Engine(PipelineConfig config);
  Engine(PipelineConfig config, std::unique_ptr<Segmenter> segmenter,
         std::unique_ptr<EmbeddingSource> embeddings);

  const PipelineConfig& config() const noexcept { return config_; }
  std::vector<std::string> list_images() const;

  PreparedImage prepare(const std::string& image_ref, bool match_all = false);

  // Row-normalized prompt embeddings, one row per prompt, ids = labels.
  EmbeddingBlock text_embeddings(const PromptSet& prompts);

  MatchedImage match(const PreparedImage& image, const EmbeddingBlock& text,
                     const PromptSet& prompts) const;

  EngineStats stats() const;

 private:
  std::filesystem::path image_path(const std::string& ref) const;

  PipelineConfig config_;
  std::unique_ptr<Segmenter> segmenter_;
  std::unique_ptr<EmbeddingSource> embeddings_;
  std::unique_ptr<TextEmbeddingCache> text_cache_;
  std::atomic<std::size_t> segment_calls_{0};
  std::atomic<std::size_t> segment_cache_hits_{0};
  std::atomic<std::size_t> crop_embed_calls_{0};
  std::atomic<std::size_t> crop_cache_hits_{0};
  std::atomic<std::size_t> text_embed_calls_{0};
};

// Instances of one image assigned to export-enabled prompts, with dataset
// class indices (position among exported classes).
std::vector<LabeledInstance> labeled_instances(const PreparedImage& image,
                                               const MatchedImage& matched,
                                               const PromptSet& prompts);

// Full matrix, winners, runner-ups and suppression trace of one image.
nlohmann::json match_to_json(const PreparedImage& image, const MatchedImage& matched,
                             const PromptSet& prompts);

struct ImageRun {
  std::string image;
  bool ok = false;
  std::string error;
  std::size_t raw_masks = 0;
  std::size_t candidates = 0;
  std::size_t kept = 0;
  std::size_t exported = 0;
  std::vector<std::string> flags;
  StageTimings timings;
};

struct RunRecord {
  std::vector<ImageRun> images;
  double text_embed_ms = 0.0;
  double export_ms = 0.0;
  double eval_ms = 0.0;
  double total_ms = 0.0;
  std::string config_digest;
  EngineStats stats;

  std::size_t successes() const;
  std::size_t failures() const;
  nlohmann::json to_json() const;
};

struct RunOptions {
  // Match every candidate and emit paired exports with and without NMS
  // under <out>/with-nms and <out>/without-nms.
  bool ablate_nms = false;
};

// Full batch run; artifacts land in config.exports.out_dir. Per-image
// failures are recorded, never thrown.
RunRecord run_pipeline(const PipelineConfig& config, const RunOptions& options = {});
RunRecord run_pipeline(Engine& engine, const RunOptions& options = {});

// Dataset over exported instances with the run's class list, splits and
// provenance; shared by the batch run and workbench export.
Dataset assemble_dataset(const Engine& engine, const PromptSet& prompts, const std::string& name,
                         std::vector<ImageRecord> images);

// Writes the configured formats for `dataset` under `out_dir`.
ExportReport export_dataset(const Dataset& dataset, const ExportConfig& exports,
                            const std::filesystem::path& out_dir,
                            const std::filesystem::path& images_dir = {});

struct StageSummary {
  std::string stage;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double per_image_mean_ms = 0.0;
};

struct BenchSummary {
  int repeats = 0;
  std::size_t images = 0;
  std::vector<StageSummary> stages;

  nlohmann::json to_json() const;
};

// Throws ConfigError when there are no images.
BenchSummary bench(const PipelineConfig& config, int n_repeats);
BenchSummary summarize_runs(std::span<const RunRecord> runs);

}  // namespace sdm
