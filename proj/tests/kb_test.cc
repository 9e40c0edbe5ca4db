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

#include "xteval/kb.h"

#include <gtest/gtest.h>

#include "testing.h"

namespace xteval {
namespace {

TEST(FactTest, MakeNormalizesAndDerivesUid) {
  const Fact a = Fact::Make("  Dante ", "born_in", "Florence\t");
  const Fact b = Fact::Make("Dante", "born_in", "Florence");
  EXPECT_EQ(a.head, "Dante");
  EXPECT_EQ(a.uid, b.uid);
  EXPECT_NE(a.uid, Fact::Make("Dante", "born_in", "Pisa").uid);
  EXPECT_THROW(Fact::Make("", "born_in", "Pisa"), Error);
}

TEST(FactSetTest, KeepsFirstOccurrence) {
  FactSet s({Fact::Make("a", "r", "b"), Fact::Make("a", "r", "b"),
             Fact::Make("c", "r", "d")},
            "t");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.ContainsTriple("c", "r", "d"));
  EXPECT_FALSE(s.ContainsTriple("c", "r", "b"));
}

TEST(FactSetTest, SelectKeepsSetOrder) {
  const FactSet s = testing::FixtureFacts();
  const auto& f = s.facts();
  const FactSet picked = s.Select({f[5].uid, f[1].uid}, "p");
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_EQ(picked.facts()[0], f[1]);
  EXPECT_EQ(picked.facts()[1], f[5]);
}

TEST(LoadFactsTest, FormatsAgree) {
  const auto dir = testing::TempDir("kb-load");
  WriteFile(dir / "f.jsonl",
            "{\"sub_label\": \"Dante\", \"predicate_id\": \"P19\", "
            "\"obj_label\": \"Florence\", \"extra\": 1}\n\n");
  WriteFile(dir / "f.tsv", "Dante\tP19\tFlorence\n");
  const FactSet lama = LoadFacts(dir / "f.jsonl", FactFormat::kLamaJsonl);
  const FactSet tsv = LoadFacts(dir / "f.tsv", FactFormat::kTsv);
  EXPECT_EQ(lama, tsv);
  SaveFacts(lama, dir / "c.jsonl");
  EXPECT_EQ(LoadFacts(dir / "c.jsonl", FactFormat::kCanonical), lama);
}

TEST(LoadFactsTest, MalformedRecordsNameTheLine) {
  const auto dir = testing::TempDir("kb-bad");
  WriteFile(dir / "bad.tsv", "a\tb\tc\nonly\ttwo\n");
  try {
    LoadFacts(dir / "bad.tsv", FactFormat::kTsv);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  EXPECT_THROW(LoadFacts(dir / "missing.tsv", FactFormat::kTsv), Error);
}

TEST(TailFilterTest, DropsMultiTokenAndUnknownTails) {
  FactSet s({Fact::Make("a", "r", "x"), Fact::Make("b", "r", "New York"),
             Fact::Make("c", "r", "zzz")},
            "t");
  const Tokenizer tok({"a", "b", "c", "x", "New", "York"});
  const TailFilterResult r = FilterSingleTokenTails(s, tok);
  EXPECT_EQ(r.facts.size(), 1u);
  EXPECT_EQ(r.dropped, 2u);
  EXPECT_FALSE(r.warning.has_value());
  const TailFilterResult none = FilterSingleTokenTails(
      FactSet({Fact::Make("b", "r", "New York")}, "t"), tok);
  EXPECT_TRUE(none.facts.empty());
  EXPECT_TRUE(none.warning.has_value());
}

TEST(EntityPoolsTest, HandCountedFixture) {
  const EntityPools p = BuildEntityPools(testing::FixtureFacts());
  EXPECT_EQ(p.all_relations.size(), 3u);
  // Dante and Galileo each appear under two relations.
  EXPECT_EQ(p.all_heads.size(), 10u);
  EXPECT_EQ(p.all_tails.size(), 12u);
  EXPECT_EQ(p.tails_by_relation.at("capital").size(), 4u);
  EXPECT_EQ(p.heads_by_relation.at("language").size(), 4u);
}

TEST(HoldoutTest, StratifiedPartition) {
  const SyntheticWorld w = testing::World(400, 6, 120, 10, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Holdout h = StratifiedHoldout(w.facts, 0.1, seed, true);
    EXPECT_EQ(h.kept.size() + h.held.size(), w.facts.size());
    for (const Fact& f : h.held.facts()) EXPECT_FALSE(h.kept.Contains(f.uid));
    // Every relation keeps at least one fact.
    EXPECT_EQ(h.kept.relations(), w.facts.relations());
  }
}

TEST(HoldoutTest, AtLeastOneFromTinySets) {
  FactSet s({Fact::Make("a", "r", "b"), Fact::Make("c", "r", "d")}, "t");
  EXPECT_EQ(StratifiedHoldout(s, 0.1, 0, false).held.size(), 0u);
  EXPECT_EQ(StratifiedHoldout(s, 0.1, 0, true).held.size(), 1u);
  FactSet one({Fact::Make("a", "r", "b")}, "t");
  EXPECT_THROW(StratifiedHoldout(one, 0.1, 0, true), Error);
}

}  // namespace
}  // namespace xteval
