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

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>

#include "sdm/digest.hpp"
#include "sdm/error.hpp"
#include "sdm/image.hpp"
#include "sdm/pipeline.hpp"
#include "sdm/process.hpp"

namespace sdm {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::unique_ptr<Segmenter> make_segmenter(const PipelineConfig& c) {
  if (!c.segments.adapter.empty()) return std::make_unique<AdapterSegmenter>(c.segments.adapter);
  return std::make_unique<PrecomputedSegmenter>(c.segments.dir);
}

std::unique_ptr<EmbeddingSource> make_embedding_source(const PipelineConfig& c) {
  if (!c.embeddings.adapter.empty()) {
    return std::make_unique<AdapterEmbeddingSource>(
        std::make_unique<AdapterEmbedder>(c.embeddings.adapter));
  }
  return std::make_unique<PrecomputedEmbeddingSource>(c.embeddings.dir);
}

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png";
}

// Atomic publish so concurrent workers never observe a partial entry.
template <typename Write>
void publish(const fs::path& path, Write&& write) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = make_scratch_dir("sdm-cache", path.parent_path()) / path.filename();
  write(tmp);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  fs::remove_all(tmp.parent_path(), ec);
}

}  // namespace

SegmentSet PrecomputedSegmenter::segment(const fs::path& image_path, int width, int height,
                                         const GridPromptSpec&) {
  const fs::path path = dir_ / (image_path.stem().string() + ".json");
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "missing segments file " + path.string());
  SegmentSet set = load_segments(path);
  if (set.width != width || set.height != height) {
    throw Error(ErrorCode::DimensionMismatch,
                path.string() + ": segments are " + std::to_string(set.width) + "x" +
                    std::to_string(set.height) + ", image is " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
  return set;
}

EmbeddingBlock PrecomputedEmbeddingSource::segments(const std::string& image_ref,
                                                    std::span<const SegmentCrop> crops) {
  const fs::path path = dir_ / (fs::path(image_ref).stem().string() + ".embeddings");
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "missing embeddings file " + path.string());
  std::vector<std::string> ids;
  ids.reserve(crops.size());
  for (const auto& c : crops) ids.push_back(c.segment_id);
  return select_rows(read_embeddings(path), ids);
}

EmbeddingBlock PrecomputedEmbeddingSource::texts(std::span<const TextItem> items) {
  const fs::path path = dir_ / "prompts.embeddings";
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "missing embeddings file " + path.string());
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (const auto& it : items) ids.push_back(it.id);
  return select_rows(read_embeddings(path), ids);
}

Engine::Engine(PipelineConfig config)
    : Engine(config, make_segmenter(config), make_embedding_source(config)) {}

Engine::Engine(PipelineConfig config, std::unique_ptr<Segmenter> segmenter,
               std::unique_ptr<EmbeddingSource> embeddings)
    : config_(std::move(config)), segmenter_(std::move(segmenter)), embeddings_(std::move(embeddings)) {
  config_.validate();
  text_cache_ = std::make_unique<TextEmbeddingCache>(config_.cache_dir.empty() ? fs::path{}
                                                                              : config_.cache_dir / "text");
}

std::vector<std::string> Engine::list_images() const {
  std::vector<std::string> refs;
  if (!fs::is_directory(config_.images_dir)) {
    throw Error(ErrorCode::ConfigError, "images_dir " + config_.images_dir.string() + " is not a directory");
  }
  for (const auto& entry : fs::directory_iterator(config_.images_dir)) {
    if (entry.is_regular_file() && is_png(entry.path())) refs.push_back(entry.path().filename().string());
  }
  std::sort(refs.begin(), refs.end());
  return refs;
}

fs::path Engine::image_path(const std::string& ref) const { return config_.images_dir / ref; }

PreparedImage Engine::prepare(const std::string& ref, bool match_all) {
  PreparedImage out;
  out.ref = ref;
  const fs::path path = image_path(ref);

  auto t = Clock::now();
  const RgbImage image = read_png_rgb(path);
  out.width = image.width();
  out.height = image.height();
  std::string image_digest;
  if (!config_.cache_dir.empty()) image_digest = sha256_file(path);
  out.timings.load_ms = elapsed_ms(t);

  t = Clock::now();
  SegmentSet set;
  fs::path seg_cache;
  if (!config_.cache_dir.empty() && segmenter_->cacheable()) {
    const std::string key = Sha256()
                                .field(image_digest)
                                .field(std::to_string(config_.grid.points_per_side))
                                .field(std::to_string(config_.grid.multimask_outputs))
                                .field(segmenter_->identity())
                                .hex();
    seg_cache = config_.cache_dir / "segments" / (key + ".json");
  }
  if (!seg_cache.empty() && fs::exists(seg_cache)) {
    set = load_segments(seg_cache);
    ++segment_cache_hits_;
  } else {
    ++segment_calls_;
    set = segmenter_->segment(path, out.width, out.height, config_.grid);
    if (!seg_cache.empty()) publish(seg_cache, [&](const fs::path& p) { save_segments(set, p); });
  }
  if (set.width != out.width || set.height != out.height) {
    throw Error(ErrorCode::DimensionMismatch, ref + ": segment grid does not match the image");
  }
  out.timings.segment_ms = elapsed_ms(t);
  out.raw_count = set.segments.size();

  t = Clock::now();
  out.candidates = filter_min_area(set.segments, config_.nms.min_area);
  if (config_.nms_enabled) {
    out.nms = mask_nms(out.candidates, config_.nms);
  } else {
    for (std::size_t i = 0; i < out.candidates.size(); ++i) out.nms.kept.push_back(i);
  }
  out.timings.nms_ms = elapsed_ms(t);

  t = Clock::now();
  std::vector<std::size_t> chosen;
  if (match_all) {
    for (std::size_t i = 0; i < out.candidates.size(); ++i) chosen.push_back(i);
  } else {
    chosen = out.nms.kept;
  }
  std::vector<SegmentCrop> crops;
  for (std::size_t i : chosen) {
    const Mask& m = out.candidates[i];
    if (m.area() == 0) continue;
    out.matched.push_back(m);
    crops.push_back(crop_for_embedding(image, m, config_.crop_mode, config_.embed_resolution));
  }
  out.timings.crop_ms = elapsed_ms(t);

  t = Clock::now();
  if (!crops.empty()) {
    fs::path emb_cache;
    if (!config_.cache_dir.empty() && embeddings_->cacheable()) {
      Sha256 h;
      h.field(image_digest)
          .field(std::string(crop_mode_name(config_.crop_mode)))
          .field(std::to_string(config_.embed_resolution))
          .field(embeddings_->identity());
      for (const auto& m : out.matched) {
        h.field(m.id());
        const auto rle = m.rle();
        std::string counts;
        for (auto c : rle.counts) counts += std::to_string(c) + ",";
        h.field(counts);
      }
      emb_cache = config_.cache_dir / "embeddings" / (h.hex() + ".embeddings");
    }
    EmbeddingBlock raw;
    if (!emb_cache.empty() && fs::exists(emb_cache)) {
      raw = read_embeddings(emb_cache);
      ++crop_cache_hits_;
    } else {
      ++crop_embed_calls_;
      raw = embeddings_->segments(ref, crops);
      if (!emb_cache.empty()) publish(emb_cache, [&](const fs::path& p) { write_embeddings(raw, p); });
    }
    out.embeddings = normalize_rows(raw);
  }
  out.timings.embed_ms = elapsed_ms(t);
  return out;
}

EmbeddingBlock Engine::text_embeddings(const PromptSet& prompts) {
  if (prompts.empty()) throw Error(ErrorCode::InvalidArgument, "prompt set is empty");
  std::vector<TextItem> items;
  items.reserve(prompts.size());
  for (const auto& p : prompts.prompts()) items.push_back({p.label, p.description});
  auto compute = [&](std::span<const TextItem> batch) {
    ++text_embed_calls_;
    return embeddings_->texts(batch);
  };
  if (!embeddings_->cacheable()) return normalize_rows(compute(items));
  return normalize_rows(text_cache_->embed(embeddings_->identity(), items, compute));
}

MatchedImage Engine::match(const PreparedImage& image, const EmbeddingBlock& text,
                           const PromptSet& prompts) const {
  MatchedImage out;
  std::optional<SimilarityFloor> floor;
  if (config_.similarity_floor) {
    const auto bg = prompts.find_label(config_.similarity_floor->label);
    if (!bg) {
      throw Error(ErrorCode::ConfigError,
                  "similarity_floor label '" + config_.similarity_floor->label + "' is not a prompt");
    }
    floor = SimilarityFloor{config_.similarity_floor->value, *bg};
  }
  if (image.embeddings.count() == 0) {
    out.matrix.cols = prompts.labels();
    return out;
  }
  out.matrix = similarity_matrix(image.embeddings, text, prompts.labels());
  out.assignments = assign_labels(out.matrix, floor);
  return out;
}

EngineStats Engine::stats() const {
  return {segment_calls_.load(), segment_cache_hits_.load(), crop_embed_calls_.load(),
          crop_cache_hits_.load(), text_embed_calls_.load()};
}

std::vector<LabeledInstance> labeled_instances(const PreparedImage& image,
                                               const MatchedImage& matched,
                                               const PromptSet& prompts) {
  std::vector<LabeledInstance> out;
  for (std::size_t r = 0; r < matched.assignments.size(); ++r) {
    const Assignment& a = matched.assignments[r];
    const auto idx = prompts.export_index(a.class_index);
    if (!idx) continue;
    out.push_back({image.matched[r], *idx, a.similarity, image.ref});
  }
  return out;
}

}  // namespace sdm
