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

#include "sdm/prompt.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include "sdm/error.hpp"

namespace sdm {

using nlohmann::json;

PromptSet::PromptSet(std::vector<Prompt> prompts) : prompts_(std::move(prompts)) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < prompts_.size(); ++i) {
    prompts_[i].class_index = static_cast<int>(i);
    if (prompts_[i].label.empty()) {
      throw Error(ErrorCode::InvalidArgument, "prompt " + std::to_string(i) + " has empty label");
    }
    if (!seen.insert(prompts_[i].label).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate prompt label '" + prompts_[i].label + "'");
    }
  }
}

std::vector<std::string> PromptSet::labels() const {
  std::vector<std::string> out;
  for (const auto& p : prompts_) out.push_back(p.label);
  return out;
}

std::vector<std::string> PromptSet::descriptions() const {
  std::vector<std::string> out;
  for (const auto& p : prompts_) out.push_back(p.description);
  return out;
}

std::vector<std::string> PromptSet::export_labels() const {
  std::vector<std::string> out;
  for (const auto& p : prompts_) {
    if (p.export_enabled) out.push_back(p.label);
  }
  return out;
}

std::optional<int> PromptSet::export_index(int class_index) const {
  if (class_index < 0 || class_index >= static_cast<int>(prompts_.size())) return std::nullopt;
  if (!prompts_[class_index].export_enabled) return std::nullopt;
  int k = 0;
  for (int i = 0; i < class_index; ++i) k += prompts_[i].export_enabled ? 1 : 0;
  return k;
}

std::optional<int> PromptSet::find_label(const std::string& label) const {
  for (const auto& p : prompts_) {
    if (p.label == label) return p.class_index;
  }
  return std::nullopt;
}

PromptSet prompts_from_json(const json& doc) {
  if (!doc.is_array()) throw Error(ErrorCode::ParseError, "prompt file must be a JSON array");
  std::vector<Prompt> prompts;
  try {
    for (const auto& item : doc) {
      Prompt p;
      p.label = item.at("label").get<std::string>();
      p.description = item.value("description", p.label);
      p.export_enabled = item.value("export", true);
      prompts.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("prompt file: ") + e.what());
  }
  return PromptSet(std::move(prompts));
}

json prompts_to_json(const PromptSet& set) {
  json doc = json::array();
  for (const auto& p : set.prompts()) {
    doc.push_back({{"label", p.label}, {"description", p.description}, {"export", p.export_enabled}});
  }
  return doc;
}

PromptSet load_prompts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return prompts_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void save_prompts(const PromptSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << prompts_to_json(set).dump(2) << '\n';
}

namespace {

bool present(const std::optional<std::string>& s) { return s && !s->empty(); }

bool starts_with_vowel(const std::string& word) {
  if (word.empty()) return false;
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())));
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

}  // namespace

std::string render_prompt(const PromptParts& parts) {
  if (parts.object.empty()) throw Error(ErrorCode::InvalidArgument, "prompt object is empty");
  std::string body;
  for (const auto* part : {&parts.color, &parts.shape}) {
    if (present(*part)) body += **part + " ";
  }
  body += parts.object;
  if (present(parts.feature)) body += " with " + *parts.feature;
  return (starts_with_vowel(body) ? "an " : "a ") + body;
}

}  // namespace sdm
