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

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdm/error.hpp"
#include "sdm/eval.hpp"
#include "sdm/pipeline.hpp"
#include "sdm/workbench.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Overrides {
  std::string config;
  std::string out;
  int workers = 0;
  bool no_nms = false;
  std::optional<double> nms_threshold;
  std::string formats;
  std::string gt;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "pipeline config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--workers", workers, "parallel images")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-nms", no_nms, "disable mask NMS");
    cmd->add_option("--nms-threshold", nms_threshold, "overlap fraction of the smaller mask (default 0.9)");
    cmd->add_option("--formats", formats, "comma list of coco,yolo-seg,yolo-det,voc");
    cmd->add_option("--gt", gt, "COCO ground truth; enables evaluation")->check(CLI::ExistingFile);
  }

  sdm::PipelineConfig load() const {
    if (config.empty()) throw sdm::Error(sdm::ErrorCode::ConfigError, "--config is required");
    sdm::PipelineConfig c = sdm::load_config(config);
    if (!out.empty()) c.exports.out_dir = out;
    if (workers > 0) c.workers = workers;
    if (no_nms) c.nms_enabled = false;
    if (nms_threshold) c.nms.threshold = *nms_threshold;
    if (!formats.empty()) c.exports.formats = split_csv(formats);
    if (!gt.empty()) c.gt = gt;
    c.validate();
    return c;
  }
};

void print_eval_summary(const fs::path& eval_dir, const std::string& prefix) {
  const fs::path summary = eval_dir / "summary.json";
  if (!fs::exists(summary)) return;
  const json s = json::parse(std::ifstream(summary));
  for (const char* kind : {"box", "mask"}) {
    const auto& k = s.at(kind);
    std::printf("%s%-4s mAP50 %.4f  mAP50:95 %.4f  mAR50:95 %.4f\n", prefix.c_str(), kind,
                k.at("map50").get<double>(), k.at("map50_95").get<double>(), k.at("mar50_95").get<double>());
  }
  const auto& sem = s.at("semantic");
  std::printf("%ssemantic mIoU %.4f  acc %.4f  FWIoU %.4f\n", prefix.c_str(), sem.at("miou").get<double>(),
              sem.at("class_accuracy").get<double>(), sem.at("fwiou").get<double>());
}

int run_exit_code(const sdm::RunRecord& record) {
  for (const auto& img : record.images) {
    if (!img.ok) std::fprintf(stderr, "failed: %s\n", img.error.c_str());
  }
  std::printf("%zu images: %zu ok, %zu failed\n", record.images.size(), record.successes(), record.failures());
  if (record.failures() == 0) return kExitOk;
  return record.successes() == 0 ? kExitFatal : kExitPartial;
}

int cmd_run(const Overrides& o, bool ablate) {
  const sdm::PipelineConfig c = o.load();
  sdm::RunOptions opts;
  opts.ablate_nms = ablate;
  const sdm::RunRecord record = sdm::run_pipeline(c, opts);
  const int code = run_exit_code(record);
  if (ablate) {
    print_eval_summary(c.exports.out_dir / "with-nms" / "eval", "with-nms     ");
    print_eval_summary(c.exports.out_dir / "without-nms" / "eval", "without-nms  ");
  } else {
    print_eval_summary(c.exports.out_dir / "eval", "");
  }
  return code;
}

void write_or_print(const std::string& path, const json& doc) {
  if (path.empty()) return;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream(p) << doc.dump(2) << '\n';
}

struct EvalArgs {
  std::string gt, pred, kind = "both", out;
  int max_dets = 100;
  std::string voc_gt, voc_pred;
  std::size_t num_classes = 0;
  bool include_background = false;
};

int cmd_eval(const EvalArgs& a) {
  if (!a.voc_gt.empty() || !a.voc_pred.empty()) {
    if (a.voc_gt.empty() || a.voc_pred.empty() || a.num_classes == 0) {
      throw sdm::Error(sdm::ErrorCode::ConfigError, "--voc-gt, --voc-pred and --num-classes go together");
    }
    std::vector<sdm::GrayImage> gts, preds;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.voc_gt)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path().filename());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (!fs::exists(fs::path(a.voc_pred) / f)) {
        throw sdm::Error(sdm::ErrorCode::UnknownImage, "no prediction map for " + f.string());
      }
      gts.push_back(sdm::read_png_gray(fs::path(a.voc_gt) / f));
      preds.push_back(sdm::read_png_gray(fs::path(a.voc_pred) / f));
    }
    const auto report = sdm::voc_eval(gts, preds, a.num_classes, {a.include_background});
    std::cout << sdm::semantic_report_table(report);
    write_or_print(a.out, sdm::semantic_report_to_json(report));
    return kExitOk;
  }
  if (a.gt.empty() || a.pred.empty()) throw sdm::Error(sdm::ErrorCode::ConfigError, "--gt and --pred are required");
  const sdm::CocoDocument gt_doc = sdm::load_coco_document(a.gt);
  const sdm::CocoDocument pred_doc = sdm::load_coco_document(a.pred);
  std::vector<sdm::GeometryKind> kinds;
  if (a.kind == "box" || a.kind == "both") kinds.push_back(sdm::GeometryKind::Box);
  if (a.kind == "mask" || a.kind == "both") kinds.push_back(sdm::GeometryKind::Mask);
  json out = json::object();
  for (auto kind : kinds) {
    sdm::EvalSettings settings;
    settings.kind = kind;
    settings.max_dets = a.max_dets;
    const auto report = sdm::coco_eval(sdm::eval_dataset_from_coco(gt_doc, kind),
                                       sdm::eval_dataset_from_coco(pred_doc, kind, &gt_doc), settings);
    std::cout << sdm::report_table(report);
    out[std::string(sdm::geometry_kind_name(kind))] = sdm::report_to_json(report);
  }
  write_or_print(a.out, out);
  return kExitOk;
}

sdm::ExportConfig export_config(const std::string& formats, const std::string& name, double epsilon) {
  sdm::ExportConfig e;
  if (!formats.empty()) e.formats = split_csv(formats);
  for (const auto& f : e.formats) {
    if (std::find(sdm::known_formats().begin(), sdm::known_formats().end(), f) == sdm::known_formats().end()) {
      throw sdm::Error(sdm::ErrorCode::ConfigError, "unknown export format '" + f + "'");
    }
  }
  if (!name.empty()) e.name = name;
  e.polygons.epsilon = epsilon;
  return e;
}

void report_export(const sdm::ExportReport& report) {
  std::printf("%zu files written, %zu polygon fidelity violations\n", report.files.size(),
              report.violations.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sdm: segment, describe and match pseudo-labelling engine"};
  app.require_subcommand(0, 1);
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "print the config JSON schema and exit");
  app.set_version_flag("--version", std::string(sdm::kEngineVersion));

  Overrides run_o, ablate_o, bench_o;
  auto* run = app.add_subcommand("run", "segment, suppress, embed, match and export a directory");
  run_o.attach(run);
  run->add_flag("--print-schema", print_schema, "print the config JSON schema and exit");

  auto* ablate = app.add_subcommand("ablate-nms", "paired exports with and without mask NMS");
  ablate_o.attach(ablate);

  int repeats = 3;
  std::string bench_json;
  auto* bench = app.add_subcommand("bench", "per-stage timings over repeated runs");
  bench_o.attach(bench);
  bench->add_option("--repeats", repeats, "number of runs")->check(CLI::PositiveNumber);
  bench->add_option("--json", bench_json, "write the summary here");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "COCO box/mask or VOC semantic evaluation");
  eval->add_option("--gt", ev.gt, "ground truth instances")->check(CLI::ExistingFile);
  eval->add_option("--pred", ev.pred, "predicted instances or results list")->check(CLI::ExistingFile);
  eval->add_option("--kind", ev.kind, "box, mask or both")->check(CLI::IsMember({"box", "mask", "both"}));
  eval->add_option("--max-dets", ev.max_dets, "detections per image and class")->check(CLI::PositiveNumber);
  eval->add_option("--voc-gt", ev.voc_gt, "directory of ground truth index PNGs")->check(CLI::ExistingDirectory);
  eval->add_option("--voc-pred", ev.voc_pred, "directory of predicted index PNGs")->check(CLI::ExistingDirectory);
  eval->add_option("--num-classes", ev.num_classes, "foreground classes in the index maps");
  eval->add_flag("--include-background", ev.include_background, "count background in the means");
  eval->add_option("--out", ev.out, "write the report as JSON");

  std::string ex_dataset, ex_out, ex_formats, ex_name;
  double ex_eps = 0.5;
  auto* exp = app.add_subcommand("export", "re-export a COCO dataset into other formats");
  exp->add_option("--dataset", ex_dataset, "COCO instances file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", ex_out, "output directory")->required();
  exp->add_option("--formats", ex_formats, "comma list of coco,yolo-seg,yolo-det,voc");
  exp->add_option("--name", ex_name, "dataset name");
  exp->add_option("--epsilon", ex_eps, "polygon simplification tolerance (px)");

  std::string mm_pseudo, mm_manual, mm_images, mm_images_file, mm_out, mm_formats;
  auto* merge = app.add_subcommand("merge-manual", "replace pseudo labels with manual labels on chosen images");
  merge->add_option("--pseudo", mm_pseudo, "pseudo-label COCO file")->required()->check(CLI::ExistingFile);
  merge->add_option("--manual", mm_manual, "manual COCO file")->required()->check(CLI::ExistingFile);
  merge->add_option("--images", mm_images, "comma list of image refs");
  merge->add_option("--images-file", mm_images_file, "one image ref per line")->check(CLI::ExistingFile);
  merge->add_option("--out", mm_out, "output directory")->required();
  merge->add_option("--formats", mm_formats, "comma list of coco,yolo-seg,yolo-det,voc");

  std::string sv_config, sv_host = "127.0.0.1", sv_static;
  int sv_port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP workbench for prompt tuning");
  serve->add_option("--config", sv_config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", sv_host, "bind address");
  serve->add_option("--port", sv_port, "port")->check(CLI::Range(1, 65535));
  serve->add_option("--static", sv_static, "UI assets to host at /")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  if (print_schema) {
    std::cout << sdm::config_schema().dump(2) << '\n';
    return kExitOk;
  }
  try {
    if (run->parsed()) return cmd_run(run_o, false);
    if (ablate->parsed()) return cmd_run(ablate_o, true);
    if (bench->parsed()) {
      const auto summary = sdm::bench(bench_o.load(), repeats);
      std::cout << summary.to_json().dump(2) << '\n';
      write_or_print(bench_json, summary.to_json());
      return kExitOk;
    }
    if (eval->parsed()) return cmd_eval(ev);
    if (exp->parsed()) {
      const sdm::Dataset ds = sdm::load_coco_dataset(ex_dataset);
      report_export(sdm::export_dataset(ds, export_config(ex_formats, ex_name, ex_eps), ex_out));
      return kExitOk;
    }
    if (merge->parsed()) {
      std::vector<std::string> refs = split_csv(mm_images);
      if (!mm_images_file.empty()) {
        std::ifstream in(mm_images_file);
        for (std::string line; std::getline(in, line);) {
          if (!line.empty()) refs.push_back(line);
        }
      }
      const sdm::Dataset merged =
          sdm::merge_manual(sdm::load_coco_dataset(mm_pseudo), sdm::load_coco_dataset(mm_manual), refs);
      report_export(sdm::export_dataset(merged, export_config(mm_formats, merged.manifest.name, 0.5), mm_out));
      return kExitOk;
    }
    if (serve->parsed()) {
      sdm::Workbench workbench(std::make_unique<sdm::Engine>(sdm::load_config(sv_config)));
      sdm::WorkbenchServer server(workbench, sv_static);
      std::printf("workbench listening on http://%s:%d\n", sv_host.c_str(), sv_port);
      std::fflush(stdout);
      return server.listen(sv_host, sv_port) ? kExitOk : kExitFatal;
    }
    std::cout << app.help();
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sdm: %s\n", e.what());
    return kExitFatal;
  }
}
