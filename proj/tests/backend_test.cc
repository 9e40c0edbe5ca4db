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

#include <cmath>

#include <gtest/gtest.h>

#include "testing.h"
#include "xteval/backend.h"
#include "xteval/extractor.h"
#include "xteval/oracle_backend.h"
#include "xteval/registry.h"

namespace xteval {
namespace {

double BinomialSigma(double p, double n) { return std::sqrt(p * (1 - p) / n); }

TEST(OracleTest, KnowledgeRateMatchesConfiguration) {
  const SyntheticWorld w = testing::World(10000, 20, 1000, 30);
  OracleOptions o;
  o.knowledge_rate = 0.34;
  OracleBackend oracle("oracle", o, w.facts);
  const double n = static_cast<double>(w.facts.size());
  const double rate = static_cast<double>(oracle.known_facts().size()) / n;
  EXPECT_NEAR(rate, 0.34, 4 * BinomialSigma(0.34, n));
}

TEST(OracleTest, ExtremeRates) {
  const FactSet facts = testing::FixtureFacts();
  OracleOptions none;
  none.knowledge_rate = 0.0;
  none.utilization_rate = 0.0;
  OracleOptions all;
  all.knowledge_rate = 1.0;
  all.utilization_rate = 1.0;
  OracleBackend a("a", none, facts), b("b", all, facts);
  for (const Fact& f : facts.facts()) {
    EXPECT_FALSE(a.Knows(f.uid));
    EXPECT_TRUE(b.Knows(f.uid));
    EXPECT_FALSE(a.Utilizes(f.uid, 3));
    EXPECT_TRUE(b.Utilizes(f.uid, 3));
  }
}

TEST(OracleTest, TailPredictionFollowsKnowledge) {
  const FactSet facts = testing::FixtureFacts();
  OracleOptions o;
  o.knowledge_rate = 0.5;
  OracleBackend oracle("oracle", o, facts);
  nn::Parameter p("p", nn::Matrix::Zero(2 * kPromptLength, 4));
  int known = 0;
  for (const Fact& f : facts.facts()) {
    const bool predicted = PredictsTail(oracle, p, f);
    EXPECT_EQ(predicted, oracle.Knows(f.uid)) << f.uid;
    known += predicted;
  }
  EXPECT_GT(known, 0);
  EXPECT_LT(known, static_cast<int>(facts.size()));
}

TEST(OracleTest, GoldScoreFollowsUtilization) {
  const FactSet facts = testing::FixtureFacts();
  OracleOptions o;
  o.utilization_rate = 0.5;
  OracleBackend oracle("oracle", o, facts);
  ScoringHead head(4, 9);
  for (const Fact& f : facts.facts()) {
    Document gold{"text", DocType::kGold, f.uid, 0, {}};
    Document neg{"other", DocType::kHR_, f.uid, 0, {}};
    const Document* docs[] = {&gold, &neg};
    const auto s = ScoreCandidates(oracle, head, "q", docs);
    EXPECT_EQ(s[0] > s[1], oracle.Utilizes(f.uid, head.seed()));
    EXPECT_GE(s[1], 0.0);
    EXPECT_LT(s[1], 1.0);
  }
}

TEST(OracleTest, SaveLoadRoundTrip) {
  const auto dir = testing::TempDir("oracle");
  OracleOptions o;
  o.knowledge_rate = 0.6;
  o.seed = 5;
  OracleBackend oracle("o1", o, testing::FixtureFacts());
  oracle.Save(dir);
  auto back = LoadBackend(dir);
  EXPECT_EQ(back->id(), "o1");
  const auto& loaded = dynamic_cast<const OracleBackend&>(*back);
  EXPECT_EQ(loaded.known_facts(), oracle.known_facts());
}

TEST(ScoringHeadTest, InitializationScale) {
  const std::size_t dim = 4096;
  ScoringHead head(dim, 1);
  const auto& w = head.weight().value;
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (dim - 1);
  // Target stddev 1/sqrt(dim); the sample variance of 4096 normals is within
  // a few percent.
  EXPECT_NEAR(std::sqrt(var) * std::sqrt(double(dim)), 1.0, 0.06);
  EXPECT_EQ(head.bias().value(0, 0), 0.0);
  ScoringHead again(dim, 1);
  EXPECT_EQ(again.weight().value, w);
  const ScoringHead back = ScoringHead::FromJson(head.ToJson());
  EXPECT_EQ(back.weight().value, w);
  EXPECT_EQ(back.seed(), 1u);
}

TEST(TopTokenTest, FirstMaximumWins) {
  const std::vector<double> l = {0.1, 0.9, 0.9, -1};
  EXPECT_EQ(TopToken(l), 1);
  EXPECT_THROW(TopToken(std::vector<double>{}), Error);
}

TEST(RegistryTest, BuiltinsAndErrors) {
  EXPECT_TRUE(IsBuiltinBackend("oracle"));
  EXPECT_EQ(BuiltinBackendSpec("tiny-mlm").type, "tiny-mlm");
  EXPECT_THROW(BuiltinBackendSpec("no-such-model"), Error);
  EXPECT_THROW(BackendSpec::FromJson(json{{"id", "x"}, {"type", "gpt"}}),
               Error);
  const std::vector<BackendSpec> declared = {
      BackendSpec::FromJson(json{{"id", "o2"}, {"type", "oracle"}})};
  EXPECT_EQ(ResolveBackend("o2", declared).type, "oracle");
  EXPECT_EQ(ResolveBackend("oracle", {}).type, "oracle");
  EXPECT_THROW(ResolveBackend("o3", declared), Error);
}

}  // namespace
}  // namespace xteval
