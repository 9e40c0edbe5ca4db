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

#include "xteval/synthetic.h"

#include <algorithm>
#include <array>
#include <set>

#include <fmt/format.h>

namespace xteval {
namespace {

struct RelationWording {
  const char* phrase;      // variant 0: "[H] [R] [T] ."
  const char* alt_text;    // variant 1
  const char* alt_phrase;
};

constexpr std::array<RelationWording, 24> kWordings = {{
    {"was born in", "the [R] of [H] is [T] .", "birthplace"},
    {"works as a", "by trade , [H] [R] [T] .", "is a"},
    {"lives in", "the [R] of [H] is [T] .", "home town"},
    {"speaks", "the [R] of [H] is [T] .", "mother tongue"},
    {"plays the", "on stage , [H] [R] [T] .", "performs on the"},
    {"supports", "the [R] of [H] is [T] .", "favourite team"},
    {"studied at", "[H] [R] [T] .", "graduated from"},
    {"is married to", "the [R] of [H] is [T] .", "spouse"},
    {"drives a", "the [R] of [H] is a [T] .", "car"},
    {"collects", "the [R] of [H] is [T] .", "hobby"},
    {"was raised by", "[H] [R] [T] .", "grew up with"},
    {"writes for", "[H] [R] [T] .", "is a columnist at"},
    {"died in", "the [R] of [H] is [T] .", "resting place"},
    {"owns a", "the [R] of [H] is a [T] .", "pet"},
    {"is a member of", "[H] [R] [T] .", "belongs to"},
    {"was founded in", "the [R] of [H] is [T] .", "founding place"},
    {"is named after", "[H] [R] [T] .", "takes its name from"},
    {"prefers", "the [R] of [H] is [T] .", "favourite dish"},
    {"votes for", "[H] [R] [T] .", "is a supporter of"},
    {"trains in", "[H] [R] [T] .", "practises"},
    {"admires", "the [R] of [H] is [T] .", "role model"},
    {"sails on", "[H] [R] [T] .", "is a sailor on"},
    {"grows", "on the farm , [H] [R] [T] .", "cultivates"},
    {"teaches", "the [R] of [H] is [T] .", "subject"},
}};

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string Syllables(Rng& rng, int count) {
  std::string w;
  for (int i = 0; i < count; ++i) {
    w += kConsonants[UniformIndex(rng, kConsonants.size())];
    w += kVowels[UniformIndex(rng, kVowels.size())];
  }
  return w;
}

// Distinct invented words; heads are capitalized so they never collide
// with tails.
std::vector<std::string> Words(Rng& rng, std::size_t n, bool capital,
                               std::set<std::string>& taken) {
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string w = Syllables(rng, 3);
    if (capital) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    if (taken.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

json SyntheticOptions::ToJson() const {
  return json{{"facts", facts},
              {"relations", relations},
              {"heads", heads},
              {"tails_per_relation", tails_per_relation},
              {"seed", seed}};
}

SyntheticOptions SyntheticOptions::FromJson(const json& j) {
  SyntheticOptions o;
  StrictObject obj(j, "synthetic");
  o.facts = obj.Get("facts", o.facts);
  o.relations = obj.Get("relations", o.relations);
  o.heads = obj.Get("heads", o.heads);
  o.tails_per_relation = obj.Get("tails_per_relation", o.tails_per_relation);
  o.seed = obj.Get<std::uint64_t>("seed", o.seed);
  obj.Finish();
  return o;
}

SyntheticWorld MakeSyntheticWorld(const SyntheticOptions& options) {
  if (options.relations == 0 || options.relations > kWordings.size()) {
    throw Error(fmt::format("synthetic worlds support 1..{} relations",
                            kWordings.size()));
  }
  if (options.facts == 0 || options.facts > options.heads * options.relations) {
    throw Error("synthetic world: facts must lie in 1..heads*relations");
  }
  if (options.tails_per_relation < 2) {
    throw Error("synthetic world: need at least two tails per relation");
  }
  Rng rng(SeedHasher().Add("synthetic").Add(options.seed).Finish());
  std::set<std::string> taken;
  const std::vector<std::string> heads =
      Words(rng, options.heads, true, taken);
  std::vector<std::string> relation_ids;
  std::vector<std::vector<std::string>> tails;
  std::vector<Template> templates;
  for (std::size_t r = 0; r < options.relations; ++r) {
    const std::string id = fmt::format("R{:02d}", r);
    relation_ids.push_back(id);
    tails.push_back(Words(rng, options.tails_per_relation, false, taken));
    const RelationWording& w = kWordings[r];
    templates.push_back({id, 0, "[H] [R] [T] .", w.phrase});
    templates.push_back({id, 1, w.alt_text, w.alt_phrase});
  }
  // Distinct (head, relation) cells in a seeded order.
  std::vector<std::size_t> cells(options.heads * options.relations);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  Shuffle(cells, rng);
  cells.resize(options.facts);
  std::sort(cells.begin(), cells.end());
  std::vector<Fact> facts;
  for (std::size_t cell : cells) {
    const std::size_t h = cell / options.relations;
    const std::size_t r = cell % options.relations;
    const std::string& tail = tails[r][UniformIndex(rng, tails[r].size())];
    facts.push_back(Fact::Make(heads[h], relation_ids[r], tail));
  }
  return SyntheticWorld{
      FactSet(std::move(facts), fmt::format("synthetic:{}", options.seed)),
      TemplatePack(std::move(templates))};
}

void SaveSyntheticWorld(const SyntheticWorld& world,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<json> rows;
  for (const Fact& f : world.facts.facts()) {
    rows.push_back(json{{"sub_label", f.head},
                        {"predicate_id", f.relation},
                        {"obj_label", f.tail}});
  }
  WriteJsonLines(dir / "facts.jsonl", rows);
  world.templates.Save(dir / "templates.jsonl");
}

}  // namespace xteval
