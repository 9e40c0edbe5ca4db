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

#include <gtest/gtest.h>

#include "testing.h"

namespace xteval {
namespace {

TEST(TemplateTest, RendersAllSlots) {
  const Template t{"capital", 1, "[H] has [T] as its [R] .", "capital"};
  EXPECT_EQ(RenderTemplate(t, "Peru", "capital", "Lima"),
            "Peru has Lima as its capital .");
  EXPECT_EQ(RenderQuery(t, "Peru", "capital"), "Peru has as its capital .");
}

TEST(TemplateTest, QueryDropsTheTail) {
  const Template t{"born_in", 0, "[H] [R] [T] .", "was born in"};
  EXPECT_EQ(RenderQuery(t, "Dante", t.phrase), "Dante was born in .");
}

TEST(TemplatePackTest, RejectsBadMarkers) {
  EXPECT_THROW(TemplatePack({{"r", 0, "[H] [T] .", "p"}}), Error);
  EXPECT_THROW(TemplatePack({{"r", 0, "[H] [R] [T] [T] .", "p"}}), Error);
  EXPECT_THROW(TemplatePack({{"r", 0, "[H] [R] [T] .", ""}}), Error);
  EXPECT_THROW(TemplatePack({{"r", 0, "[H] [R] [T] .", "p"},
                             {"r", 0, "[R] [H] [T] .", "p"}}),
               Error);
}

TEST(TemplatePackTest, CoverageAndRoundTrip) {
  const TemplatePack pack = testing::FixtureTemplates();
  EXPECT_TRUE(pack.Covers("capital"));
  EXPECT_FALSE(pack.Covers("P19"));
  EXPECT_EQ(pack.ForRelation("born_in").size(), 2u);
  pack.RequireCoverage(testing::FixtureFacts());
  EXPECT_THROW(
      pack.RequireCoverage(FactSet({Fact::Make("a", "P19", "b")}, "t")),
      Error);

  const auto dir = testing::TempDir("templates");
  pack.Save(dir / "t.jsonl");
  const TemplatePack back = TemplatePack::Load(dir / "t.jsonl");
  EXPECT_EQ(back.version(), pack.version());
  EXPECT_EQ(back.templates().size(), pack.templates().size());
}

TEST(TemplatePackTest, VocabularyHasPhraseWordsButNoMarkers) {
  const auto words = testing::FixtureTemplates().Vocabulary();
  auto has = [&](const std::string& w) {
    return std::find(words.begin(), words.end(), w) != words.end();
  };
  EXPECT_TRUE(has("born"));
  EXPECT_TRUE(has("birthplace"));
  EXPECT_FALSE(has("[H]"));
}

TEST(TemplatePackTest, ShippedPacksLoad) {
  const TemplatePack trex =
      TemplatePack::Load(std::filesystem::path(XTEVAL_DATA_DIR) /
                         "trex_templates.jsonl");
  std::set<std::string> relations;
  for (const Template& t : trex.templates()) relations.insert(t.relation);
  EXPECT_EQ(relations.size(), 41u);
  for (const std::string& r : relations) {
    EXPECT_GE(trex.ForRelation(r).size(), 2u) << r;
  }
}

}  // namespace
}  // namespace xteval
