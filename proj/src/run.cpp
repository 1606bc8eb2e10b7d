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
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "sdm/error.hpp"
#include "sdm/eval.hpp"
#include "sdm/pipeline.hpp"
#include "sdm/process.hpp"

namespace sdm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void write_json(const fs::path& path, const json& doc) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json timings_json(const StageTimings& t) {
  return {{"load_ms", t.load_ms},   {"segment_ms", t.segment_ms}, {"nms_ms", t.nms_ms},
          {"crop_ms", t.crop_ms},   {"embed_ms", t.embed_ms},     {"match_ms", t.match_ms}};
}

json stats_json(const EngineStats& s) {
  return {{"segment_calls", s.segment_calls},
          {"segment_cache_hits", s.segment_cache_hits},
          {"crop_embed_calls", s.crop_embed_calls},
          {"crop_cache_hits", s.crop_cache_hits},
          {"text_embed_calls", s.text_embed_calls}};
}

struct ImageOutcome {
  ImageRun run;
  ImageRecord record;       // exported instances (post NMS)
  ImageRecord all_record;   // every candidate, ablation only
  json matches;
};

ImageOutcome process_image(Engine& engine, const std::string& ref, const EmbeddingBlock& text,
                           const PromptSet& prompts, bool ablate) {
  ImageOutcome out;
  out.run.image = ref;
  try {
    PreparedImage prep = engine.prepare(ref, ablate);
    auto t = Clock::now();
    const MatchedImage matched = engine.match(prep, text, prompts);
    prep.timings.match_ms = elapsed_ms(t);
    auto instances = labeled_instances(prep, matched, prompts);

    out.record = {ref, prep.width, prep.height, {}};
    out.all_record = out.record;
    if (ablate) {
      std::set<std::string> kept_ids;
      for (std::size_t k : prep.nms.kept) kept_ids.insert(prep.candidates[k].id());
      for (const auto& inst : instances) {
        if (kept_ids.count(inst.mask.id())) out.record.instances.push_back(inst);
      }
      out.all_record.instances = std::move(instances);
    } else {
      out.record.instances = std::move(instances);
    }

    out.run.ok = true;
    out.run.raw_masks = prep.raw_count;
    out.run.candidates = prep.candidates.size();
    out.run.kept = prep.nms.kept.size();
    out.run.exported = out.record.instances.size();
    out.run.timings = prep.timings;
    if (prep.raw_count == 0) out.run.flags.push_back("no-masks");
    if (!prep.candidates.empty() && prep.nms.kept.empty()) out.run.flags.push_back("all-suppressed");
    if (out.run.exported == 0) out.run.flags.push_back("no-labels");
    if (std::any_of(matched.assignments.begin(), matched.assignments.end(),
                    [](const Assignment& a) { return a.below_floor; })) {
      out.run.flags.push_back("below-floor");
    }
    out.matches = match_to_json(prep, matched, prompts);
  } catch (const std::exception& e) {
    out.run.ok = false;
    out.run.error = ref + ": " + e.what();
  }
  return out;
}

std::vector<ImageOutcome> process_all(Engine& engine, const std::vector<std::string>& refs,
                                      const EmbeddingBlock& text, const PromptSet& prompts, bool ablate) {
  std::vector<ImageOutcome> results(refs.size());
  const std::size_t n_workers =
      std::min<std::size_t>(std::max(1, engine.config().workers), std::max<std::size_t>(1, refs.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < refs.size(); i = next++) {
      results[i] = process_image(engine, refs[i], text, prompts, ablate);
    }
  };
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return results;
}

json provenance_json(const Engine& engine, const PromptSet& prompts, const std::string& digest) {
  const PipelineConfig& c = engine.config();
  return {{"engine", "sdm"},
          {"engine_version", kEngineVersion},
          {"config_digest", digest},
          {"prompts", prompts_to_json(prompts)},
          {"nms", {{"enabled", c.nms_enabled}, {"threshold", c.nms.threshold}, {"min_area", c.nms.min_area}}},
          {"crop", {{"mode", crop_mode_name(c.crop_mode)}, {"embed_resolution", c.embed_resolution}}},
          {"grid", {{"points_per_side", c.grid.points_per_side},
                    {"multimask_outputs", c.grid.multimask_outputs}}}};
}

json fidelity_json(const ExportReport& report) {
  json v = json::array();
  for (const auto& f : report.violations) {
    v.push_back({{"image", f.image_ref}, {"mask", f.mask_id}, {"iou", f.iou}});
  }
  return {{"threshold", kPolygonFidelityIou}, {"violations", std::move(v)}};
}

// COCO box and mask metrics plus semantic metrics against a ground truth file.
void evaluate_into(const fs::path& gt_path, const Dataset& predictions, const fs::path& out_dir) {
  const CocoDocument gt_doc = load_coco_document(gt_path);
  std::set<std::string> gt_refs;
  for (const auto& im : gt_doc.images) gt_refs.insert(im.file_name);

  Dataset preds = predictions;
  std::vector<std::string> unmatched;
  preds.images.clear();
  for (const auto& img : predictions.images) {
    if (gt_refs.count(img.ref)) {
      preds.images.push_back(img);
    } else {
      unmatched.push_back(img.ref);
    }
  }

  json summary = {{"ground_truth", gt_path.string()}, {"images_without_gt", unmatched}};
  for (GeometryKind kind : {GeometryKind::Box, GeometryKind::Mask}) {
    const EvalDataset gt = eval_dataset_from_coco(gt_doc, kind);
    const EvalDataset dets = eval_dataset_from_dataset(preds, kind);
    EvalSettings settings;
    settings.kind = kind;
    const EvalReport report = coco_eval(gt, dets, settings);
    const std::string name(geometry_kind_name(kind));
    write_json(out_dir / (name + ".json"), report_to_json(report));
    summary[name] = {{"map50", report.map50}, {"map50_95", report.map50_95}, {"mar50_95", report.mar50_95}};
  }

  const Dataset gt_ds = dataset_from_coco(gt_doc);
  const std::size_t k = gt_ds.manifest.class_names.size();
  std::vector<GrayImage> gt_maps, pred_maps;
  for (const auto& img : gt_ds.images) {
    gt_maps.push_back(semantic_map(img, k));
    const ImageRecord* p = preds.find(img.ref);
    pred_maps.push_back(p ? semantic_map(*p, k) : semantic_map({img.ref, img.width, img.height, {}}, k));
  }
  const SemanticReport sem = voc_eval(gt_maps, pred_maps, k);
  write_json(out_dir / "semantic.json", semantic_report_to_json(sem));
  summary["semantic"] = {{"miou", sem.miou}, {"class_accuracy", sem.class_accuracy_mean}, {"fwiou", sem.fwiou}};
  write_json(out_dir / "summary.json", summary);
}

}  // namespace

json match_to_json(const PreparedImage& prep, const MatchedImage& m, const PromptSet& prompts) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.assignments.size(); ++r) {
    const Assignment& a = m.assignments[r];
    json row = {{"segment_id", a.segment_id},
                {"label", prompts[a.class_index].label},
                {"class_index", a.class_index},
                {"similarity", a.similarity},
                {"below_floor", a.below_floor},
                {"similarities", json(std::vector<double>(m.matrix.values.begin() + r * m.matrix.col_count(),
                                                          m.matrix.values.begin() + (r + 1) * m.matrix.col_count()))}};
    row["runner_up"] = a.runner_up ? json{{"class_index", a.runner_up->class_index},
                                          {"similarity", a.runner_up->similarity}}
                                   : json(nullptr);
    rows.push_back(std::move(row));
  }
  json suppressed = json::array();
  for (const auto& s : prep.nms.suppressed) {
    suppressed.push_back({{"id", prep.candidates[s.index].id()},
                          {"by", prep.candidates[s.suppressor].id()},
                          {"smaller_ratio", s.smaller_ratio}});
  }
  return {{"image", prep.ref}, {"columns", m.matrix.cols}, {"assignments", std::move(rows)},
          {"suppressed", std::move(suppressed)}};
}

Dataset assemble_dataset(const Engine& engine, const PromptSet& prompts, const std::string& name,
                         std::vector<ImageRecord> images) {
  const PipelineConfig& c = engine.config();
  const std::string digest = config_digest(c);
  Dataset ds;
  ds.manifest.name = name;
  ds.manifest.class_names = prompts.export_labels();
  ds.manifest.formats = c.exports.formats;
  ds.manifest.provenance = provenance_json(engine, prompts, digest);
  std::vector<std::string> refs;
  for (const auto& img : images) refs.push_back(img.ref);
  ds.manifest.splits = assign_splits(refs, c.exports.val_fraction, c.exports.test_fraction, c.seed);
  ds.images = std::move(images);
  return ds;
}

namespace {

void emit(const Dataset& ds, const PipelineConfig& c, const fs::path& out_dir, RunRecord& record) {
  auto t = Clock::now();
  const ExportReport report = export_dataset(ds, c.exports, out_dir, c.images_dir);
  write_json(out_dir / "artifacts" / "fidelity.json", fidelity_json(report));
  record.export_ms += elapsed_ms(t);
  if (!c.gt.empty()) {
    t = Clock::now();
    evaluate_into(c.gt, ds, out_dir / "eval");
    record.eval_ms += elapsed_ms(t);
  }
}

}  // namespace

std::size_t RunRecord::successes() const {
  return static_cast<std::size_t>(
      std::count_if(images.begin(), images.end(), [](const ImageRun& r) { return r.ok; }));
}

std::size_t RunRecord::failures() const { return images.size() - successes(); }

json RunRecord::to_json() const {
  json imgs = json::array();
  for (const auto& r : images) {
    json j = {{"image", r.image}, {"ok", r.ok}};
    if (r.ok) {
      j["raw_masks"] = r.raw_masks;
      j["candidates"] = r.candidates;
      j["kept"] = r.kept;
      j["exported"] = r.exported;
      j["flags"] = r.flags;
      j["timings"] = timings_json(r.timings);
    } else {
      j["error"] = r.error;
    }
    imgs.push_back(std::move(j));
  }
  return {{"engine_version", kEngineVersion},
          {"config_digest", config_digest},
          {"images", std::move(imgs)},
          {"successes", successes()},
          {"failures", failures()},
          {"text_embed_ms", text_embed_ms},
          {"export_ms", export_ms},
          {"eval_ms", eval_ms},
          {"total_ms", total_ms},
          {"stats", stats_json(stats)}};
}

ExportReport export_dataset(const Dataset& dataset, const ExportConfig& exports,
                            const fs::path& out_dir, const fs::path& images_dir) {
  ExportReport report;
  fs::create_directories(out_dir);
  for (const auto& f : exports.formats) {
    if (f == "coco") {
      report.merge(export_coco(dataset, out_dir / "coco" / "instances.json", exports.polygons));
    } else if (f == "yolo-seg") {
      report.merge(export_yolo(dataset, YoloTask::Segment, out_dir / "yolo-seg", exports.polygons));
    } else if (f == "yolo-det") {
      report.merge(export_yolo(dataset, YoloTask::Detect, out_dir / "yolo-det", exports.polygons));
    } else if (f == "voc") {
      report.merge(export_voc_semantic(dataset, out_dir / "voc"));
    } else {
      throw Error(ErrorCode::ConfigError, "unknown export format '" + f + "'");
    }
  }
  if (exports.copy_images && !images_dir.empty()) {
    fs::create_directories(out_dir / "images");
    for (const auto& img : dataset.images) {
      fs::copy_file(images_dir / img.ref, out_dir / "images" / img.ref, fs::copy_options::overwrite_existing);
      report.files.push_back(out_dir / "images" / img.ref);
    }
  }
  DatasetManifest manifest = dataset.manifest;
  manifest.formats = exports.formats;
  write_manifest(manifest, out_dir / "manifest.json");
  report.files.push_back(out_dir / "manifest.json");
  return report;
}

RunRecord run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  config.validate();
  Engine engine(config);
  return run_pipeline(engine, options);
}

RunRecord run_pipeline(Engine& engine, const RunOptions& options) {
  const auto start = Clock::now();
  const PipelineConfig& c = engine.config();
  if (c.exports.out_dir.empty()) throw Error(ErrorCode::ConfigError, "export.out_dir is required");
  RunRecord record;
  record.config_digest = config_digest(c);

  const PromptSet prompts = load_prompts(c.prompts);
  auto t = Clock::now();
  const EmbeddingBlock text = engine.text_embeddings(prompts);
  record.text_embed_ms = elapsed_ms(t);

  const std::vector<std::string> refs = engine.list_images();
  std::vector<ImageOutcome> results = process_all(engine, refs, text, prompts, options.ablate_nms);

  std::vector<ImageRecord> kept, all;
  json matches = json::array();
  for (auto& r : results) {
    if (r.run.ok) {
      kept.push_back(std::move(r.record));
      all.push_back(std::move(r.all_record));
      matches.push_back(std::move(r.matches));
    }
    record.images.push_back(std::move(r.run));
  }

  const fs::path out = c.exports.out_dir;
  fs::create_directories(out);
  write_json(out / "artifacts" / "assignments.json", matches);
  if (options.ablate_nms) {
    Dataset with = assemble_dataset(engine, prompts, c.exports.name + "-nms", std::move(kept));
    with.manifest.provenance["nms"]["enabled"] = true;
    with.manifest.provenance["ablation_of"] = c.exports.name;
    Dataset without = assemble_dataset(engine, prompts, c.exports.name + "-no-nms", std::move(all));
    without.manifest.provenance["nms"]["enabled"] = false;
    without.manifest.provenance["ablation_of"] = c.exports.name;
    emit(with, c, out / "with-nms", record);
    emit(without, c, out / "without-nms", record);
  } else {
    const Dataset ds = assemble_dataset(engine, prompts, c.exports.name, std::move(kept));
    emit(ds, c, out, record);
  }
  record.stats = engine.stats();
  record.total_ms = elapsed_ms(start);
  write_json(out / "run_record.json", record.to_json());
  return record;
}

json BenchSummary::to_json() const {
  json stages_json = json::array();
  for (const auto& s : stages) {
    stages_json.push_back({{"stage", s.stage},
                           {"mean_ms", s.mean_ms},
                           {"median_ms", s.median_ms},
                           {"p95_ms", s.p95_ms},
                           {"per_image_mean_ms", s.per_image_mean_ms}});
  }
  return {{"repeats", repeats}, {"images", images}, {"stages", std::move(stages_json)}};
}

BenchSummary summarize_runs(std::span<const RunRecord> runs) {
  BenchSummary out;
  out.repeats = static_cast<int>(runs.size());
  if (runs.empty()) return out;
  out.images = runs.front().images.size();

  using Getter = double (*)(const StageTimings&);
  const std::vector<std::pair<std::string, Getter>> image_stages = {
      {"load", [](const StageTimings& t) { return t.load_ms; }},
      {"segment", [](const StageTimings& t) { return t.segment_ms; }},
      {"nms", [](const StageTimings& t) { return t.nms_ms; }},
      {"crop", [](const StageTimings& t) { return t.crop_ms; }},
      {"embed", [](const StageTimings& t) { return t.embed_ms; }},
      {"match", [](const StageTimings& t) { return t.match_ms; }},
  };
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (const auto& [name, get] : image_stages) {
    std::vector<double> v;
    for (const auto& run : runs) {
      double sum = 0.0;
      for (const auto& img : run.images) sum += get(img.timings);
      v.push_back(sum);
    }
    series.emplace_back(name, std::move(v));
  }
  std::vector<double> text, exp, ev, total;
  for (const auto& run : runs) {
    text.push_back(run.text_embed_ms);
    exp.push_back(run.export_ms);
    ev.push_back(run.eval_ms);
    total.push_back(run.total_ms);
  }
  series.emplace_back("text_embed", std::move(text));
  series.emplace_back("export", std::move(exp));
  series.emplace_back("eval", std::move(ev));
  series.emplace_back("total", std::move(total));

  for (auto& [name, v] : series) {
    StageSummary s;
    s.stage = name;
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    double sum = 0.0;
    for (double x : sorted) sum += x;
    s.mean_ms = sum / static_cast<double>(n);
    s.median_ms = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
    s.per_image_mean_ms = out.images ? s.mean_ms / static_cast<double>(out.images) : 0.0;
    out.stages.push_back(std::move(s));
  }
  return out;
}

BenchSummary bench(const PipelineConfig& config, int n_repeats) {
  if (n_repeats < 1) throw Error(ErrorCode::ConfigError, "bench needs at least one repeat");
  PipelineConfig c = config;
  fs::path scratch;
  if (c.exports.out_dir.empty()) {
    scratch = make_scratch_dir("sdm-bench");
    c.exports.out_dir = scratch;
  }
  Engine engine(c);
  if (engine.list_images().empty()) {
    if (!scratch.empty()) fs::remove_all(scratch);
    throw Error(ErrorCode::ConfigError, "bench: no images in " + c.images_dir.string());
  }
  std::vector<RunRecord> runs;
  for (int i = 0; i < n_repeats; ++i) runs.push_back(run_pipeline(engine));
  if (!scratch.empty()) fs::remove_all(scratch);
  return summarize_runs(runs);
}

}  // namespace sdm
