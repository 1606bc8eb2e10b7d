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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdm {

struct Prompt {
  std::string label;
  std::string description;
  int class_index = 0;
  bool export_enabled = true;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

// Ordered prompts; class_index is the array position.
class PromptSet {
 public:
  PromptSet() = default;
  explicit PromptSet(std::vector<Prompt> prompts);

  const std::vector<Prompt>& prompts() const noexcept { return prompts_; }
  std::size_t size() const noexcept { return prompts_.size(); }
  bool empty() const noexcept { return prompts_.empty(); }
  const Prompt& operator[](std::size_t i) const { return prompts_.at(i); }

  std::vector<std::string> labels() const;
  std::vector<std::string> descriptions() const;
  // Labels of export-enabled prompts, in class order.
  std::vector<std::string> export_labels() const;
  // Position among export-enabled prompts, or nullopt for export=false.
  std::optional<int> export_index(int class_index) const;
  std::optional<int> find_label(const std::string& label) const;

  friend bool operator==(const PromptSet&, const PromptSet&) = default;

 private:
  std::vector<Prompt> prompts_;
};

// Prompt file: [{"label": str, "description": str, "export": bool}].
PromptSet prompts_from_json(const nlohmann::json& doc);
nlohmann::json prompts_to_json(const PromptSet& set);
PromptSet load_prompts(const std::filesystem::path& path);
void save_prompts(const PromptSet& set, const std::filesystem::path& path);

struct PromptParts {
  std::optional<std::string> color;
  std::optional<std::string> shape;
  std::string object;
  std::optional<std::string> feature;
};

// "a/an {color} {shape} {object} with {feature}", skipping absent parts.
std::string render_prompt(const PromptParts& parts);

}  // namespace sdm
