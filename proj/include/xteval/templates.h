// Copyright 2026 The XTEval Authors.
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

#ifndef XTEVAL_TEMPLATES_H_
#define XTEVAL_TEMPLATES_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xteval/kb.h"

namespace xteval {

inline constexpr std::string_view kHeadMarker = "[H]";
inline constexpr std::string_view kRelationMarker = "[R]";
inline constexpr std::string_view kTailMarker = "[T]";

// One surface form for a relation. `text` holds each of [H], [R], [T]
// exactly once; [R] is filled with `phrase` when the relation is rendered.
struct Template {
  std::string relation;
  int variant = 0;
  std::string text;
  std::string phrase;
};

// Fills the markers. Result is whitespace-normalized.
std::string RenderTemplate(const Template& tmpl, std::string_view head,
                           std::string_view phrase, std::string_view tail);
// Same as RenderTemplate with the tail marker removed.
std::string RenderQuery(const Template& tmpl, std::string_view head,
                        std::string_view phrase);

class TemplatePack {
 public:
  TemplatePack() = default;
  // Validates marker counts and that (relation, variant) pairs are unique.
  explicit TemplatePack(std::vector<Template> templates);

  static TemplatePack Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  const std::vector<Template>& ForRelation(std::string_view relation) const;
  bool Covers(std::string_view relation) const;
  // Throws naming the first relation of `facts` without a template.
  void RequireCoverage(const FactSet& facts) const;

  const std::vector<Template>& templates() const { return all_; }
  // Content hash of the canonical serialization.
  const std::string& version() const { return version_; }
  // Every word that can appear in a rendering, for vocabulary building.
  std::vector<std::string> Vocabulary() const;

 private:
  std::vector<Template> all_;
  std::map<std::string, std::vector<Template>, std::less<>> by_relation_;
  std::string version_;
};

}  // namespace xteval

#endif  // XTEVAL_TEMPLATES_H_
