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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdm/error.hpp"
#include "sdm/pipeline.hpp"

namespace httplib {
class Server;
}

namespace sdm {

// In-memory prompt-tuning sessions over one shared engine. Methods throw
// sdm::Error; UnknownSession and UnknownImage map to 404, NothingMatched to
// 409, everything else to 422.
class Workbench {
 public:
  explicit Workbench(std::unique_ptr<Engine> engine);

  Engine& engine() noexcept { return *engine_; }

  std::string create_session();
  // Ingest, NMS, crops and segment embeddings, once per image.
  nlohmann::json load_image(const std::string& session, const std::string& image_ref);
  // Replaces the prompt set and re-matches every loaded image.
  nlohmann::json put_prompts(const std::string& session, const nlohmann::json& prompts);
  nlohmann::json match(const std::string& session, const std::string& image_ref) const;
  nlohmann::json export_session(const std::string& session, const nlohmann::json& request) const;
  nlohmann::json promptset(const std::string& session) const;
  nlohmann::json stats(const std::string& session) const;

  static nlohmann::json render(const nlohmann::json& parts);
  // Response schema per endpoint.
  static nlohmann::json schemas();

 private:
  struct Session {
    mutable std::shared_mutex mutex;
    std::vector<std::string> order;
    std::map<std::string, PreparedImage> images;
    PromptSet prompts;
    EmbeddingBlock text;
    std::map<std::string, MatchedImage> matches;
    std::size_t prompt_updates = 0;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  static nlohmann::json match_response(const Session& s, const std::string& ref);

  std::unique_ptr<Engine> engine_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

int http_status(const Error& error) noexcept;

// HTTP/JSON front end with permissive CORS. `static_dir`, when given, is
// mounted at /.
class WorkbenchServer {
 public:
  WorkbenchServer(Workbench& workbench, std::filesystem::path static_dir = {});
  ~WorkbenchServer();
  WorkbenchServer(const WorkbenchServer&) = delete;
  WorkbenchServer& operator=(const WorkbenchServer&) = delete;

  // Blocking.
  bool listen(const std::string& host, int port);
  // Background thread on an ephemeral port; returns the port.
  int start(const std::string& host = "127.0.0.1");
  void stop();

 private:
  void routes();

  Workbench& workbench_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace sdm
