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

#ifndef XTEVAL_DOCUMENT_H_
#define XTEVAL_DOCUMENT_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xteval/common.h"

namespace xteval {

// Slot pattern of a generated document over (head, relation, tail). A '_'
// in the name marks a randomized slot. kUnrelatedTrue renders the gold
// triple of a different fact.
enum class DocType {
  kGold,  // hrt
  kHR_,   // hr_
  k_RT,   // _rt
  kH_T,   // h_t
  kH__,   // h__
  k_R_,   // _r_
  k__T,   // __t
  kUnrelatedTrue,
};

inline constexpr std::array<DocType, 3> kTrainingNegativeTypes = {
    DocType::kHR_, DocType::k_RT, DocType::kH_T};

inline constexpr std::array<DocType, 7> kNonGoldTypes = {
    DocType::kHR_, DocType::k_RT, DocType::kH_T,         DocType::kH__,
    DocType::k_R_, DocType::k__T, DocType::kUnrelatedTrue};

std::string_view DocTypeName(DocType type);
DocType ParseDocType(std::string_view name);

bool HeadIsGold(DocType type);
bool RelationIsGold(DocType type);
bool TailIsGold(DocType type);

// Sampled values for randomized slots. For kUnrelatedTrue, source_uid names
// the rendered fact and the three slots carry its entities.
struct Substitutions {
  std::optional<std::string> head;
  std::optional<std::string> relation;
  std::optional<std::string> tail;
  std::optional<std::string> source_uid;

  friend bool operator==(const Substitutions&,
                         const Substitutions&) = default;
};

struct Document {
  std::string text;
  DocType doc_type = DocType::kGold;
  std::string fact_uid;
  int template_variant = 0;
  Substitutions substitutions;

  friend bool operator==(const Document&, const Document&) = default;
};

json DocumentToJson(const Document& doc);
Document DocumentFromJson(const json& j);

}  // namespace xteval

#endif  // XTEVAL_DOCUMENT_H_
