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

#include "xteval/templates.h"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace xteval {
namespace {

std::size_t CountOccurrences(std::string_view text, std::string_view marker) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(marker); pos != std::string_view::npos;
       pos = text.find(marker, pos + marker.size())) {
    ++count;
  }
  return count;
}

}  // namespace

std::string RenderTemplate(const Template& tmpl, std::string_view head,
                           std::string_view phrase, std::string_view tail) {
  std::string out = tmpl.text;
  const std::size_t h = out.find(kHeadMarker);
  const std::size_t r = out.find(kRelationMarker);
  const std::size_t t = out.find(kTailMarker);
  // Replace right-to-left so earlier offsets stay valid.
  std::vector<std::pair<std::size_t, std::string_view>> edits = {
      {h, head}, {r, phrase}, {t, tail}};
  std::sort(edits.begin(), edits.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [pos, value] : edits) {
    if (pos != std::string::npos) out.replace(pos, 3, value);
  }
  return NormalizeWhitespace(out);
}

std::string RenderQuery(const Template& tmpl, std::string_view head,
                        std::string_view phrase) {
  return RenderTemplate(tmpl, head, phrase, "");
}

TemplatePack::TemplatePack(std::vector<Template> templates)
    : all_(std::move(templates)) {
  std::set<std::pair<std::string, int>> seen;
  std::string canonical;
  for (const Template& t : all_) {
    for (std::string_view marker : {kHeadMarker, kRelationMarker, kTailMarker}) {
      const std::size_t n = CountOccurrences(t.text, marker);
      if (n != 1) {
        throw Error(fmt::format(
            "template '{}' for relation {} has {} occurrences of {} "
            "(expected exactly one)",
            t.text, t.relation, n, marker));
      }
    }
    if (NormalizeWhitespace(t.relation).empty()) {
      throw Error("template with empty relation: " + t.text);
    }
    if (NormalizeWhitespace(t.phrase).empty()) {
      throw Error("template for relation " + t.relation +
                  " has an empty relation phrase");
    }
    if (!seen.emplace(t.relation, t.variant).second) {
      throw Error(fmt::format("duplicate template variant {} for relation {}",
                              t.variant, t.relation));
    }
    by_relation_[t.relation].push_back(t);
    canonical += t.relation + '\x1f' + std::to_string(t.variant) + '\x1f' +
                 t.text + '\x1f' + t.phrase + '\n';
  }
  version_ = Sha256Hex(canonical).substr(0, 12);
}

TemplatePack TemplatePack::Load(const std::filesystem::path& path) {
  std::vector<Template> templates;
  ForEachJsonLine(path, [&](std::size_t line_no, const json& record) {
    try {
      StrictObject obj(record, fmt::format("{}:{}", path.string(), line_no));
      Template t;
      t.relation = NormalizeWhitespace(obj.Required<std::string>("relation"));
      t.variant = obj.Required<int>("variant");
      t.text = obj.Required<std::string>("template");
      t.phrase = obj.Required<std::string>("phrase");
      obj.Finish();
      templates.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw Error(fmt::format("{}:{}: malformed template record ({})",
                              path.string(), line_no, e.what()));
    }
  });
  if (templates.empty()) throw Error("no templates in " + path.string());
  return TemplatePack(std::move(templates));
}

void TemplatePack::Save(const std::filesystem::path& path) const {
  std::vector<json> records;
  for (const Template& t : all_) {
    records.push_back(json{{"relation", t.relation},
                           {"variant", t.variant},
                           {"template", t.text},
                           {"phrase", t.phrase}});
  }
  WriteJsonLines(path, records);
}

const std::vector<Template>& TemplatePack::ForRelation(
    std::string_view relation) const {
  auto it = by_relation_.find(relation);
  if (it == by_relation_.end()) {
    throw Error("template pack has no template for relation " +
                std::string(relation));
  }
  return it->second;
}

bool TemplatePack::Covers(std::string_view relation) const {
  return by_relation_.find(relation) != by_relation_.end();
}

void TemplatePack::RequireCoverage(const FactSet& facts) const {
  for (const std::string& rel : facts.relations()) {
    if (!Covers(rel)) {
      throw Error("template pack has no template for relation " + rel);
    }
  }
}

std::vector<std::string> TemplatePack::Vocabulary() const {
  std::vector<std::string> words;
  for (const Template& t : all_) {
    std::string stripped = RenderTemplate(t, "", t.phrase, "");
    for (std::string& piece : Tokenizer::Split(stripped)) {
      words.push_back(std::move(piece));
    }
  }
  return words;
}

}  // namespace xteval
