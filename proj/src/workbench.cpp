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

#include "sdm/workbench.hpp"

#include <algorithm>

#include <httplib.h>

#include "sdm/error.hpp"

namespace sdm {

namespace fs = std::filesystem;
using nlohmann::json;

Workbench::Workbench(std::unique_ptr<Engine> engine) : engine_(std::move(engine)) {}

std::string Workbench::create_session() {
  auto session = std::make_shared<Session>();
  const fs::path& prompts = engine_->config().prompts;
  if (!prompts.empty() && fs::exists(prompts)) {
    session->prompts = load_prompts(prompts);
    if (!session->prompts.empty()) session->text = engine_->text_embeddings(session->prompts);
  }
  std::lock_guard lock(sessions_mutex_);
  const std::string id = "s" + std::to_string(next_id_++);
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<Workbench::Session> Workbench::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
  return it->second;
}

json Workbench::match_response(const Session& s, const std::string& ref) {
  const auto img = s.images.find(ref);
  if (img == s.images.end()) throw Error(ErrorCode::UnknownImage, "image '" + ref + "' is not loaded");
  const auto m = s.matches.find(ref);
  if (s.prompts.empty() || m == s.matches.end()) {
    throw Error(ErrorCode::NothingMatched, "image '" + ref + "' has no prompts to match against");
  }
  json out = match_to_json(img->second, m->second, s.prompts);
  out["width"] = img->second.width;
  out["height"] = img->second.height;
  return out;
}

json Workbench::load_image(const std::string& id, const std::string& ref) {
  const auto session = find(id);
  if (ref.empty() || ref.find('/') != std::string::npos || ref.find("..") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "image ref must be a bare file name");
  }
  if (!fs::exists(engine_->config().images_dir / ref)) {
    throw Error(ErrorCode::UnknownImage, "no image '" + ref + "' in " + engine_->config().images_dir.string());
  }
  PreparedImage prep = engine_->prepare(ref);

  json masks = json::array();
  std::vector<bool> kept(prep.candidates.size(), false);
  for (std::size_t k : prep.nms.kept) kept[k] = true;
  for (std::size_t i = 0; i < prep.candidates.size(); ++i) {
    const Mask& m = prep.candidates[i];
    const RunLength rle = m.rle();
    const BBox& b = m.bbox();
    masks.push_back({{"id", m.id()},
                     {"rle", {{"size", {rle.height, rle.width}}, {"counts", rle.counts}}},
                     {"area", m.area()},
                     {"bbox", {b.x, b.y, b.w, b.h}},
                     {"stability_score", m.stability_score() ? json(*m.stability_score()) : json(nullptr)},
                     {"predicted_iou", m.predicted_iou() ? json(*m.predicted_iou()) : json(nullptr)},
                     {"kept", static_cast<bool>(kept[i])}});
  }
  json summary = {{"image", ref},
                  {"width", prep.width},
                  {"height", prep.height},
                  {"raw_count", prep.raw_count},
                  {"kept", prep.nms.kept.size()},
                  {"masks", std::move(masks)}};

  std::unique_lock lock(session->mutex);
  if (!session->prompts.empty()) {
    session->matches[ref] = engine_->match(prep, session->text, session->prompts);
  }
  if (!session->images.count(ref)) session->order.push_back(ref);
  session->images[ref] = std::move(prep);
  return summary;
}

json Workbench::put_prompts(const std::string& id, const json& doc) {
  const auto session = find(id);
  const json& list = doc.is_object() && doc.contains("prompts") ? doc["prompts"] : doc;
  PromptSet prompts = prompts_from_json(list);
  if (prompts.empty()) throw Error(ErrorCode::InvalidArgument, "prompt set is empty");

  std::unique_lock lock(session->mutex);
  EmbeddingBlock text = engine_->text_embeddings(prompts);
  std::map<std::string, MatchedImage> matches;
  for (const auto& [ref, prep] : session->images) matches[ref] = engine_->match(prep, text, prompts);
  session->prompts = std::move(prompts);
  session->text = std::move(text);
  session->matches = std::move(matches);
  ++session->prompt_updates;

  json images = json::array();
  for (const auto& ref : session->order) images.push_back(match_response(*session, ref));
  return {{"prompts", prompts_to_json(session->prompts)}, {"images", std::move(images)}};
}

json Workbench::match(const std::string& id, const std::string& ref) const {
  const auto session = find(id);
  std::shared_lock lock(session->mutex);
  return match_response(*session, ref);
}

json Workbench::export_session(const std::string& id, const json& request) const {
  const auto session = find(id);
  std::shared_lock lock(session->mutex);
  if (session->matches.empty()) throw Error(ErrorCode::NothingMatched, "no matched images to export");

  const PipelineConfig& c = engine_->config();
  ExportConfig exports = c.exports;
  if (request.contains("formats")) exports.formats = request["formats"].get<std::vector<std::string>>();
  for (const auto& f : exports.formats) {
    if (std::find(known_formats().begin(), known_formats().end(), f) == known_formats().end()) {
      throw Error(ErrorCode::InvalidArgument, "unknown export format '" + f + "'");
    }
  }
  fs::path out_dir;
  if (request.contains("out_dir")) {
    out_dir = request["out_dir"].get<std::string>();
  } else if (!c.exports.out_dir.empty()) {
    out_dir = c.exports.out_dir / "workbench" / id;
  } else {
    throw Error(ErrorCode::ConfigError, "export needs out_dir in the request or the config");
  }
  const std::string name = request.value("name", exports.name);

  std::vector<ImageRecord> records;
  for (const auto& [ref, matched] : session->matches) {
    const PreparedImage& prep = session->images.at(ref);
    records.push_back({ref, prep.width, prep.height, labeled_instances(prep, matched, session->prompts)});
  }
  const Dataset ds = assemble_dataset(*engine_, session->prompts, name, std::move(records));
  const ExportReport report = export_dataset(ds, exports, out_dir, c.images_dir);
  json files = json::array();
  for (const auto& f : report.files) files.push_back(f.string());
  return {{"out_dir", out_dir.string()},
          {"formats", exports.formats},
          {"images", ds.images.size()},
          {"instances", ds.instance_count()},
          {"files", std::move(files)},
          {"fidelity_violations", report.violations.size()}};
}

json Workbench::promptset(const std::string& id) const {
  const auto session = find(id);
  std::shared_lock lock(session->mutex);
  return prompts_to_json(session->prompts);
}

json Workbench::stats(const std::string& id) const {
  const auto session = find(id);
  std::shared_lock lock(session->mutex);
  const EngineStats s = engine_->stats();
  return {{"session", id},
          {"images", session->images.size()},
          {"matched", session->matches.size()},
          {"prompt_updates", session->prompt_updates},
          {"engine", {{"segment_calls", s.segment_calls},
                      {"segment_cache_hits", s.segment_cache_hits},
                      {"crop_embed_calls", s.crop_embed_calls},
                      {"crop_cache_hits", s.crop_cache_hits},
                      {"text_embed_calls", s.text_embed_calls}}}};
}

json Workbench::render(const json& parts) {
  if (!parts.is_object()) throw Error(ErrorCode::InvalidArgument, "expected an object of prompt parts");
  auto opt = [&](const char* key) -> std::optional<std::string> {
    if (!parts.contains(key) || parts[key].is_null()) return std::nullopt;
    std::string v = parts[key].get<std::string>();
    if (v.empty()) return std::nullopt;
    return v;
  };
  PromptParts p;
  p.color = opt("color");
  p.shape = opt("shape");
  p.object = parts.value("object", std::string());
  p.feature = opt("feature");
  if (p.object.empty()) throw Error(ErrorCode::InvalidArgument, "object is required");
  return {{"prompt", render_prompt(p)}};
}

json Workbench::schemas() {
  const json str = {{"type", "string"}};
  const json num = {{"type", "number"}};
  const json integer = {{"type", "integer"}, {"minimum", 0}};
  const json error = {{"type", "object"},
                      {"required", {"error", "message"}},
                      {"properties", {{"error", str}, {"message", str}}}};
  const json rle = {{"type", "object"},
                    {"required", {"size", "counts"}},
                    {"properties", {{"size", {{"type", "array"}, {"items", integer}}},
                                    {"counts", {{"type", "array"}, {"items", integer}}}}}};
  const json score = {{"type", {"number", "null"}}};
  const json mask = {{"type", "object"},
                     {"required", {"id", "rle", "area", "bbox", "stability_score", "predicted_iou", "kept"}},
                     {"properties", {{"id", str},
                                     {"rle", rle},
                                     {"area", integer},
                                     {"bbox", {{"type", "array"}, {"items", integer}}},
                                     {"stability_score", score},
                                     {"predicted_iou", score},
                                     {"kept", {{"type", "boolean"}}}}}};
  const json runner_up = {{"type", {"object", "null"}},
                          {"properties", {{"class_index", integer}, {"similarity", num}}}};
  const json assignment = {
      {"type", "object"},
      {"required", {"segment_id", "label", "class_index", "similarity", "similarities", "runner_up", "below_floor"}},
      {"properties", {{"segment_id", str},
                      {"label", str},
                      {"class_index", integer},
                      {"similarity", num},
                      {"similarities", {{"type", "array"}, {"items", num}}},
                      {"runner_up", runner_up},
                      {"below_floor", {{"type", "boolean"}}}}}};
  const json match = {
      {"type", "object"},
      {"required", {"image", "width", "height", "columns", "assignments", "suppressed"}},
      {"properties", {{"image", str},
                      {"width", integer},
                      {"height", integer},
                      {"columns", {{"type", "array"}, {"items", str}}},
                      {"assignments", {{"type", "array"}, {"items", assignment}}},
                      {"suppressed", {{"type", "array"},
                                      {"items", {{"type", "object"},
                                                 {"required", {"id", "by", "smaller_ratio"}},
                                                 {"properties", {{"id", str}, {"by", str}, {"smaller_ratio", num}}}}}}}}}};
  const json prompt_list = {
      {"type", "array"},
      {"items", {{"type", "object"},
                 {"required", {"label", "description", "export"}},
                 {"properties", {{"label", str}, {"description", str}, {"export", {{"type", "boolean"}}}}}}}};
  return {
      {"error", error},
      {"POST /sessions", {{"type", "object"}, {"required", {"session"}}, {"properties", {{"session", str}}}}},
      {"POST /sessions/{id}/images",
       {{"type", "object"},
        {"required", {"image", "width", "height", "raw_count", "kept", "masks"}},
        {"properties", {{"image", str},
                        {"width", integer},
                        {"height", integer},
                        {"raw_count", integer},
                        {"kept", integer},
                        {"masks", {{"type", "array"}, {"items", mask}}}}}}},
      {"PUT /sessions/{id}/prompts",
       {{"type", "object"},
        {"required", {"prompts", "images"}},
        {"properties", {{"prompts", prompt_list}, {"images", {{"type", "array"}, {"items", match}}}}}}},
      {"GET /sessions/{id}/images/{img}/match", match},
      {"POST /sessions/{id}/export",
       {{"type", "object"},
        {"required", {"out_dir", "formats", "images", "instances", "files", "fidelity_violations"}},
        {"properties", {{"out_dir", str},
                        {"formats", {{"type", "array"}, {"items", str}}},
                        {"images", integer},
                        {"instances", integer},
                        {"files", {{"type", "array"}, {"items", str}}},
                        {"fidelity_violations", integer}}}}},
      {"GET /sessions/{id}/promptset", prompt_list},
      {"GET /sessions/{id}/stats",
       {{"type", "object"},
        {"required", {"session", "images", "matched", "prompt_updates", "engine"}},
        {"properties", {{"session", str},
                        {"images", integer},
                        {"matched", integer},
                        {"prompt_updates", integer},
                        {"engine", {{"type", "object"},
                                    {"required", {"segment_calls", "segment_cache_hits", "crop_embed_calls",
                                                  "crop_cache_hits", "text_embed_calls"}}}}}}}},
      {"POST /render-prompt",
       {{"type", "object"}, {"required", {"prompt"}}, {"properties", {{"prompt", str}}}}},
      {"GET /schemas", {{"type", "object"}}},
  };
}

int http_status(const Error& error) noexcept {
  switch (error.code()) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownImage: return 404;
    case ErrorCode::NothingMatched: return 409;
    default: return 422;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Handler>
httplib::Server::Handler guarded(Handler&& handler) {
  return [handler = std::forward<Handler>(handler)](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, 200, handler(req));
    } catch (const Error& e) {
      send_json(res, http_status(e), {{"error", std::string(error_code_name(e.code()))}, {"message", e.detail()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}});
    }
  };
}

json body_of(const httplib::Request& req) {
  return req.body.empty() ? json::object() : json::parse(req.body);
}

}  // namespace

WorkbenchServer::WorkbenchServer(Workbench& workbench, fs::path static_dir)
    : workbench_(workbench), server_(std::make_unique<httplib::Server>()) {
  routes();
  if (!static_dir.empty()) server_->set_mount_point("/", static_dir.string());
}

WorkbenchServer::~WorkbenchServer() { stop(); }

void WorkbenchServer::routes() {
  auto& s = *server_;
  auto& wb = workbench_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
  s.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Post("/sessions", guarded([&](const httplib::Request&) { return json{{"session", wb.create_session()}}; }));
  s.Post(R"(/sessions/([^/]+)/images)", guarded([&](const httplib::Request& req) {
           const json body = body_of(req);
           return wb.load_image(req.matches[1], body.at("image").get<std::string>());
         }));
  s.Put(R"(/sessions/([^/]+)/prompts)",
        guarded([&](const httplib::Request& req) { return wb.put_prompts(req.matches[1], body_of(req)); }));
  s.Get(R"(/sessions/([^/]+)/images/([^/]+)/match)",
        guarded([&](const httplib::Request& req) { return wb.match(req.matches[1], req.matches[2]); }));
  s.Post(R"(/sessions/([^/]+)/export)",
         guarded([&](const httplib::Request& req) { return wb.export_session(req.matches[1], body_of(req)); }));
  s.Get(R"(/sessions/([^/]+)/promptset)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded([&](const httplib::Request& r) { return wb.promptset(r.matches[1]); })(req, res);
    if (res.status == 200) res.set_header("Content-Disposition", "attachment; filename=\"prompts.json\"");
  });
  s.Get(R"(/sessions/([^/]+)/stats)",
        guarded([&](const httplib::Request& req) { return wb.stats(req.matches[1]); }));
  s.Post("/render-prompt", guarded([](const httplib::Request& req) { return Workbench::render(body_of(req)); }));
  s.Get("/schemas", guarded([](const httplib::Request&) { return Workbench::schemas(); }));
}

bool WorkbenchServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int WorkbenchServer::start(const std::string& host) {
  const int port = server_->bind_to_any_port(host);
  if (port < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void WorkbenchServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace sdm
