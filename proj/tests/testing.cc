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

#include "testing.h"

#include <unistd.h>

#include <fmt/format.h>

namespace xteval::testing {

std::filesystem::path TempDir(std::string_view name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   fmt::format("xteval-{}-{}", name, ::getpid());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

FactSet FixtureFacts() {
  std::vector<Fact> facts = {
      Fact::Make("Dante", "born_in", "Florence"),
      Fact::Make("Galileo", "born_in", "Pisa"),
      Fact::Make("Verdi", "born_in", "Busseto"),
      Fact::Make("Volta", "born_in", "Como"),
      Fact::Make("France", "capital", "Paris"),
      Fact::Make("Italy", "capital", "Rome"),
      Fact::Make("Spain", "capital", "Madrid"),
      Fact::Make("Peru", "capital", "Lima"),
      Fact::Make("Dante", "language", "Italian"),
      Fact::Make("Cervantes", "language", "Spanish"),
      Fact::Make("Moliere", "language", "French"),
      Fact::Make("Galileo", "language", "Latin"),
  };
  return FactSet(std::move(facts), "fixture");
}

TemplatePack FixtureTemplates() {
  return TemplatePack({
      {"born_in", 0, "[H] [R] [T] .", "was born in"},
      {"born_in", 1, "the [R] of [H] is [T] .", "birthplace"},
      {"capital", 0, "the [R] of [H] is [T] .", "capital"},
      {"capital", 1, "[H] has [T] as its [R] .", "capital"},
      {"language", 0, "[H] [R] [T] .", "wrote in"},
      {"language", 1, "the [R] of [H] was [T] .", "language"},
  });
}

SyntheticWorld World(std::size_t facts, std::size_t relations,
                     std::size_t heads, std::size_t tails,
                     std::uint64_t seed) {
  SyntheticOptions o;
  o.facts = facts;
  o.relations = relations;
  o.heads = heads;
  o.tails_per_relation = tails;
  o.seed = seed;
  return MakeSyntheticWorld(o);
}

ExperimentConfig OracleExperiment(const std::filesystem::path& root,
                                  const SyntheticWorld& world,
                                  double knowledge_rate,
                                  double utilization_rate, int seeds) {
  SaveSyntheticWorld(world, root / "world");
  std::vector<std::uint64_t> s(static_cast<std::size_t>(seeds));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  const json j = {
      {"schema_version", kConfigSchemaVersion},
      {"backends",
       {{{"id", "oracle"},
         {"type", "oracle"},
         {"options",
          {{"knowledge_rate", knowledge_rate},
           {"utilization_rate", utilization_rate}}}}}},
      {"diagnostic", {{"path", "world/facts.jsonl"}}},
      {"templates", "world/templates.jsonl"},
      {"seeds", {{"extraction", s}, {"split", s}, {"finetune", s}}},
      {"output_root", "out"},
  };
  return ParseConfig(j, root);
}

std::string CheckNegative(const Document& doc, const Fact& fact,
                          const TemplatePack& pack) {
  const Substitutions& s = doc.substitutions;
  const std::string name(DocTypeName(doc.doc_type));
  if (doc.fact_uid != fact.uid) return name + ": wrong fact uid";
  if (doc.doc_type == DocType::kGold) return name + ": gold is not a negative";
  if (doc.doc_type == DocType::kUnrelatedTrue) {
    if (!s.source_uid || *s.source_uid == fact.uid) {
      return name + ": bad source";
    }
    return "";
  }
  auto slot = [&](bool gold, const std::optional<std::string>& sub,
                  const std::string& value, const char* what,
                  std::string& out) -> std::string {
    if (gold) {
      if (sub) return fmt::format("{}: {} substituted but gold", name, what);
      out = value;
      return "";
    }
    if (!sub) return fmt::format("{}: {} missing substitution", name, what);
    if (*sub == value) return fmt::format("{}: {} equals gold", name, what);
    out = *sub;
    return "";
  };
  std::string h, r, t, err;
  if (!(err = slot(HeadIsGold(doc.doc_type), s.head, fact.head, "head", h))
           .empty() ||
      !(err = slot(RelationIsGold(doc.doc_type), s.relation, fact.relation,
                   "relation", r))
           .empty() ||
      !(err = slot(TailIsGold(doc.doc_type), s.tail, fact.tail, "tail", t))
           .empty()) {
    return err;
  }
  for (const Template& tpl : pack.ForRelation(r)) {
    if (tpl.variant != doc.template_variant) continue;
    if (RenderTemplate(tpl, h, tpl.phrase, t) == doc.text) return "";
    return fmt::format("{}: text '{}' is not the rendering of ({}, {}, {})",
                       name, doc.text, h, r, t);
  }
  return fmt::format("{}: no template {} for {}", name, doc.template_variant,
                     r);
}

}  // namespace xteval::testing
