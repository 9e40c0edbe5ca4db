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

#include "xteval/document.h"

namespace xteval {

std::string_view DocTypeName(DocType type) {
  switch (type) {
    case DocType::kGold:
      return "hrt";
    case DocType::kHR_:
      return "hr_";
    case DocType::k_RT:
      return "_rt";
    case DocType::kH_T:
      return "h_t";
    case DocType::kH__:
      return "h__";
    case DocType::k_R_:
      return "_r_";
    case DocType::k__T:
      return "__t";
    case DocType::kUnrelatedTrue:
      return "unrelated_true";
  }
  return "?";
}

DocType ParseDocType(std::string_view name) {
  for (DocType t : {DocType::kGold, DocType::kHR_, DocType::k_RT,
                    DocType::kH_T, DocType::kH__, DocType::k_R_, DocType::k__T,
                    DocType::kUnrelatedTrue}) {
    if (DocTypeName(t) == name) return t;
  }
  throw Error("unknown document type '" + std::string(name) + "'");
}

bool HeadIsGold(DocType type) {
  return type == DocType::kGold || type == DocType::kHR_ ||
         type == DocType::kH_T || type == DocType::kH__;
}

bool RelationIsGold(DocType type) {
  return type == DocType::kGold || type == DocType::kHR_ ||
         type == DocType::k_RT || type == DocType::k_R_;
}

bool TailIsGold(DocType type) {
  return type == DocType::kGold || type == DocType::k_RT ||
         type == DocType::kH_T || type == DocType::k__T;
}

json DocumentToJson(const Document& doc) {
  json subs = json::object();
  if (doc.substitutions.head) subs["head"] = *doc.substitutions.head;
  if (doc.substitutions.relation) subs["relation"] = *doc.substitutions.relation;
  if (doc.substitutions.tail) subs["tail"] = *doc.substitutions.tail;
  if (doc.substitutions.source_uid) {
    subs["source_uid"] = *doc.substitutions.source_uid;
  }
  return json{{"text", doc.text},
              {"doc_type", DocTypeName(doc.doc_type)},
              {"fact_uid", doc.fact_uid},
              {"template", doc.template_variant},
              {"substitutions", std::move(subs)}};
}

Document DocumentFromJson(const json& j) {
  Document doc;
  doc.text = j.at("text").get<std::string>();
  doc.doc_type = ParseDocType(j.at("doc_type").get<std::string>());
  doc.fact_uid = j.at("fact_uid").get<std::string>();
  doc.template_variant = j.at("template").get<int>();
  const json& subs = j.at("substitutions");
  auto opt = [&subs](const char* key) -> std::optional<std::string> {
    if (!subs.contains(key)) return std::nullopt;
    return subs.at(key).get<std::string>();
  };
  doc.substitutions.head = opt("head");
  doc.substitutions.relation = opt("relation");
  doc.substitutions.tail = opt("tail");
  doc.substitutions.source_uid = opt("source_uid");
  return doc;
}

}  // namespace xteval
