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

// Seeded synthetic fact worlds: invented single-token entity names, a fixed
// tail pool per relation, and two templates per relation.

#ifndef XTEVAL_SYNTHETIC_H_
#define XTEVAL_SYNTHETIC_H_

#include <filesystem>

#include "xteval/kb.h"
#include "xteval/templates.h"

namespace xteval {

struct SyntheticOptions {
  std::size_t facts = 200;
  std::size_t relations = 4;
  std::size_t heads = 60;
  std::size_t tails_per_relation = 8;
  std::uint64_t seed = 0;

  json ToJson() const;
  static SyntheticOptions FromJson(const json& j);
};

struct SyntheticWorld {
  FactSet facts;
  TemplatePack templates;
};

// Each fact pairs a distinct (head, relation) with a uniformly drawn tail
// of that relation. Requires facts <= heads * relations.
SyntheticWorld MakeSyntheticWorld(const SyntheticOptions& options);

// Writes facts.jsonl (lama_jsonl fields) and templates.jsonl.
void SaveSyntheticWorld(const SyntheticWorld& world,
                        const std::filesystem::path& dir);

}  // namespace xteval

#endif  // XTEVAL_SYNTHETIC_H_
