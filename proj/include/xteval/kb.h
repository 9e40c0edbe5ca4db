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

// Fact base: triples, fact sets, and the entity pools used when
// randomizing document slots.

#ifndef XTEVAL_KB_H_
#define XTEVAL_KB_H_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xteval/common.h"
#include "xteval/tokenizer.h"

namespace xteval {

struct Fact {
  std::string head;
  std::string relation;
  std::string tail;
  std::string uid;

  // Normalizes whitespace, rejects empty fields, and derives the uid.
  static Fact Make(std::string_view head, std::string_view relation,
                   std::string_view tail);

  friend bool operator==(const Fact&, const Fact&) = default;
};

// Content hash of an already-normalized triple (first 16 hex digits of
// SHA-256 over the unit-separator-joined fields).
std::string FactUid(std::string_view head, std::string_view relation,
                    std::string_view tail);

// Ordered, uid-deduplicated collection of facts. Immutable once built.
class FactSet {
 public:
  FactSet() = default;
  // Keeps the first occurrence of every uid.
  FactSet(std::vector<Fact> facts, std::string source);

  const std::vector<Fact>& facts() const { return facts_; }
  const std::set<std::string>& relations() const { return relations_; }
  const std::string& source() const { return source_; }
  std::size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }

  bool Contains(std::string_view uid) const;
  const Fact* Find(std::string_view uid) const;
  // True when (head, relation, tail) is a fact of this set.
  bool ContainsTriple(std::string_view head, std::string_view relation,
                      std::string_view tail) const;

  FactSet Filter(const std::function<bool(const Fact&)>& keep,
                 std::string source) const;
  // Facts whose uid is in `uids`, in this set's order.
  FactSet Select(const std::vector<std::string>& uids,
                 std::string source) const;

  friend bool operator==(const FactSet& a, const FactSet& b) {
    return a.facts_ == b.facts_;
  }

 private:
  std::vector<Fact> facts_;
  std::set<std::string> relations_;
  std::string source_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class FactFormat { kLamaJsonl, kTsv, kCanonical };

FactFormat ParseFactFormat(std::string_view name);
std::string_view FactFormatName(FactFormat format);

// Errors name the offending line; an empty result is an error.
FactSet LoadFacts(const std::filesystem::path& path, FactFormat format);
// Canonical format: one JSON record per line with uid, head, relation, tail.
void SaveFacts(const FactSet& facts, const std::filesystem::path& path);

struct TailFilterResult {
  FactSet facts;
  std::size_t dropped = 0;
  std::optional<std::string> warning;
};

// Keeps facts whose tail is exactly one in-vocabulary token.
TailFilterResult FilterSingleTokenTails(const FactSet& facts,
                                        const Tokenizer& tokenizer);

// Per-relation head/tail pools plus the cross-relation unions. All pools
// are sorted and deduplicated.
struct EntityPools {
  std::map<std::string, std::vector<std::string>> heads_by_relation;
  std::map<std::string, std::vector<std::string>> tails_by_relation;
  std::vector<std::string> all_relations;
  std::vector<std::string> all_heads;
  std::vector<std::string> all_tails;
};

EntityPools BuildEntityPools(const FactSet& facts);

struct Holdout {
  FactSet kept;
  FactSet held;
};

// Per relation, holds out round(fraction * n_r) facts but never a whole
// relation, so every held relation also appears in `kept`. With
// `at_least_one`, a single fact is taken from the largest relation when the
// rounding leaves nothing held.
Holdout StratifiedHoldout(const FactSet& facts, double fraction,
                          std::uint64_t seed, bool at_least_one);

}  // namespace xteval

#endif  // XTEVAL_KB_H_
