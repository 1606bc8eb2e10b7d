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

#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sdm/dataset.hpp"
#include "sdm/error.hpp"
#include "sdm/eval.hpp"
#include "sdm/export.hpp"
#include "sdm/mask.hpp"
#include "sdm/nms.hpp"
#include "sdm/pipeline.hpp"
#include "sdm/polygon.hpp"
#include "sdm/prompt.hpp"
#include "sdm/similarity.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

using BoolArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

sdm::Bitmap to_bitmap(const BoolArray& a) {
  if (a.ndim() != 2) throw sdm::Error(sdm::ErrorCode::InvalidArgument, "mask must be a 2-D array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  std::vector<std::uint8_t> data(a.data(), a.data() + a.size());
  for (auto& v : data) v = v ? 1 : 0;
  return sdm::Bitmap(h, w, std::move(data));
}

py::array_t<bool> to_array(const sdm::Bitmap& b) {
  py::array_t<bool> out({b.height(), b.width()});
  auto* p = out.mutable_data();
  for (std::size_t k = 0; k < b.size(); ++k) p[k] = b.data()[k] != 0;
  return out;
}

sdm::EmbeddingBlock to_block(const FloatArray& a, const std::string& prefix) {
  if (a.ndim() != 2) throw sdm::Error(sdm::ErrorCode::InvalidArgument, "embeddings must be a 2-D array");
  std::vector<std::string> ids;
  for (py::ssize_t r = 0; r < a.shape(0); ++r) ids.push_back(prefix + std::to_string(r));
  return sdm::EmbeddingBlock(std::move(ids), static_cast<std::uint32_t>(a.shape(1)),
                             std::vector<float>(a.data(), a.data() + a.size()));
}

std::vector<sdm::Mask> to_masks(const std::vector<BoolArray>& masks, const std::vector<double>& scores) {
  if (masks.size() != scores.size()) {
    throw sdm::Error(sdm::ErrorCode::SizeMismatch, "masks and scores differ in length");
  }
  std::vector<sdm::Mask> out;
  for (std::size_t i = 0; i < masks.size(); ++i) out.emplace_back(std::to_string(i), to_bitmap(masks[i]), scores[i]);
  return out;
}

py::dict nms(const std::vector<BoolArray>& masks, const std::vector<double>& scores, double threshold,
             std::int64_t min_area, bool break_on_suppress) {
  const auto ms = to_masks(masks, scores);
  sdm::NmsConfig cfg{threshold, min_area, break_on_suppress};
  const auto o = sdm::mask_nms(ms, cfg);
  py::list suppressed;
  for (const auto& s : o.suppressed) {
    suppressed.append(py::dict(py::arg("index") = s.index, py::arg("by") = s.suppressor,
                               py::arg("smaller_ratio") = s.smaller_ratio));
  }
  return py::dict(py::arg("kept") = o.kept, py::arg("suppressed") = suppressed);
}

py::list match(const FloatArray& segments, const FloatArray& texts, std::optional<double> floor,
               int floor_class) {
  const auto sim = sdm::similarity_matrix(sdm::normalize_rows(to_block(segments, "s")),
                                          sdm::normalize_rows(to_block(texts, "t")));
  std::optional<sdm::SimilarityFloor> f;
  if (floor) f = sdm::SimilarityFloor{*floor, floor_class};
  py::list out;
  std::size_t r = 0;
  for (const auto& a : sdm::assign_labels(sim, f)) {
    std::vector<double> row(sim.values.begin() + r * sim.col_count(), sim.values.begin() + (r + 1) * sim.col_count());
    ++r;
    py::object runner = py::none();
    if (a.runner_up) {
      runner = py::dict(py::arg("class_index") = a.runner_up->class_index,
                        py::arg("similarity") = a.runner_up->similarity);
    }
    out.append(py::dict(py::arg("class_index") = a.class_index, py::arg("similarity") = a.similarity,
                        py::arg("below_floor") = a.below_floor, py::arg("runner_up") = runner,
                        py::arg("similarities") = row));
  }
  return out;
}

sdm::GeometryKind kind_of(const std::string& k) {
  if (k == "box") return sdm::GeometryKind::Box;
  if (k == "mask") return sdm::GeometryKind::Mask;
  throw sdm::Error(sdm::ErrorCode::InvalidArgument, "kind must be box or mask, got " + k);
}

py::object coco_eval_files(const std::filesystem::path& gt, const std::filesystem::path& pred,
                           const std::string& kind, int max_dets) {
  const auto gt_doc = sdm::load_coco_document(gt);
  const auto pred_doc = sdm::load_coco_document(pred);
  const auto k = kind_of(kind);
  sdm::EvalSettings s;
  s.kind = k;
  s.max_dets = max_dets;
  const auto report = sdm::coco_eval(sdm::eval_dataset_from_coco(gt_doc, k),
                                     sdm::eval_dataset_from_coco(pred_doc, k, &gt_doc), s);
  return to_py(sdm::report_to_json(report));
}

py::object voc_eval_arrays(const std::vector<BoolArray>& gts, const std::vector<BoolArray>& preds,
                           std::size_t num_classes, bool include_background) {
  auto gray = [](const BoolArray& a) {
    if (a.ndim() != 2) throw sdm::Error(sdm::ErrorCode::InvalidArgument, "label map must be a 2-D array");
    return sdm::GrayImage{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                          std::vector<std::uint8_t>(a.data(), a.data() + a.size())};
  };
  std::vector<sdm::GrayImage> g, p;
  for (const auto& a : gts) g.push_back(gray(a));
  for (const auto& a : preds) p.push_back(gray(a));
  return to_py(sdm::semantic_report_to_json(sdm::voc_eval(g, p, num_classes, {include_background})));
}

}  // namespace

PYBIND11_MODULE(_sdm_core, m) {
  m.doc() = "Segmentation, region-text matching and dataset export engine";
  m.attr("__version__") = sdm::kEngineVersion;

  py::exception<sdm::Error>(m, "SdmError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const sdm::Error& e) {
      py::object cls = py::module_::import("sdm_engine._sdm_core").attr("SdmError");
      py::object exc = cls(e.what());
      exc.attr("code") = std::string(sdm::error_code_name(e.code()));
      PyErr_SetObject(cls.ptr(), exc.ptr());
    }
  });

  m.def(
      "encode_rle",
      [](const BoolArray& a) {
        const auto rle = sdm::encode_rle(to_bitmap(a));
        return py::dict(py::arg("size") = std::vector<int>{rle.height, rle.width}, py::arg("counts") = rle.counts);
      },
      py::arg("mask"));
  m.def(
      "decode_rle",
      [](const std::vector<int>& size, const std::vector<std::uint32_t>& counts) {
        if (size.size() != 2) throw sdm::Error(sdm::ErrorCode::MalformedRle, "size must be [height, width]");
        return to_array(sdm::decode_rle({size[0], size[1], counts}));
      },
      py::arg("size"), py::arg("counts"));
  m.def(
      "bbox",
      [](const BoolArray& a) {
        const auto b = sdm::bbox_of(to_bitmap(a));
        return std::vector<int>{b.x, b.y, b.w, b.h};
      },
      py::arg("mask"));
  m.def("mask_nms", &nms, py::arg("masks"), py::arg("scores"), py::arg("threshold") = 0.9,
        py::arg("min_area") = 0, py::arg("break_on_suppress") = false);
  m.def("match", &match, py::arg("segment_embeddings"), py::arg("text_embeddings"), py::arg("floor") = py::none(),
        py::arg("floor_class") = 0);
  m.def(
      "mask_to_polygons",
      [](const BoolArray& a, double epsilon, std::int64_t min_component_area) {
        std::vector<std::vector<std::pair<double, double>>> out;
        for (const auto& poly : sdm::mask_to_polygons(sdm::Mask("m", to_bitmap(a)), {epsilon, min_component_area})) {
          auto& ring = out.emplace_back();
          for (const auto& pt : poly) ring.emplace_back(pt.x, pt.y);
        }
        return out;
      },
      py::arg("mask"), py::arg("epsilon") = 0.5, py::arg("min_component_area") = 4);
  m.def(
      "render_prompt",
      [](const std::string& object, std::optional<std::string> color, std::optional<std::string> shape,
         std::optional<std::string> feature) { return sdm::render_prompt({color, shape, object, feature}); },
      py::arg("object"), py::arg("color") = py::none(), py::arg("shape") = py::none(),
      py::arg("feature") = py::none());
  m.def("coco_eval", &coco_eval_files, py::arg("gt"), py::arg("pred"), py::arg("kind") = "box",
        py::arg("max_dets") = 100);
  m.def("voc_eval", &voc_eval_arrays, py::arg("gt_maps"), py::arg("pred_maps"), py::arg("num_classes"),
        py::arg("include_background") = false);
  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> out, bool ablate_nms) {
        auto cfg = sdm::load_config(config);
        if (out) cfg.exports.out_dir = *out;
        sdm::RunRecord rec;
        {
          py::gil_scoped_release release;
          rec = sdm::run_pipeline(cfg, {ablate_nms});
        }
        return to_py(rec.to_json());
      },
      py::arg("config"), py::arg("out_dir") = py::none(), py::arg("ablate_nms") = false);
  m.def("config_schema", [] { return to_py(sdm::config_schema()); });
}
