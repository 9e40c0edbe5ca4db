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

#include "xteval/evaluator.h"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "testing.h"

namespace xteval {
namespace {

// Scores every document by a hash of (seed, text), or a constant.
class FakeScorer final : public ModelBackend {
 public:
  explicit FakeScorer(std::uint64_t seed, bool constant = false)
      : seed_(seed), constant_(constant), tokenizer_({"x"}) {}

  const std::string& id() const override { return id_; }
  std::string_view type() const override { return "fake"; }
  ArchitectureKind architecture() const override {
    return ArchitectureKind::kEncoderMasked;
  }
  const Tokenizer& tokenizer() const override { return tokenizer_; }
  std::size_t embedding_dim() const override { return 4; }
  std::size_t context_length() const override { return 512; }
  double embedding_rms() const override { return 1.0; }
  bool differentiable() const override { return false; }
  nn::Matrix EmbedPrompt(const AssembledPrompt&) const override {
    throw Error("unused");
  }
  std::unique_ptr<TailPass> ForwardTail(const AssembledPrompt&) const override {
    throw Error("unused");
  }
  std::unique_ptr<ScorePass> ForwardScores(
      ScoringHead&, std::string_view,
      std::span<const Document* const> documents) override {
    struct Pass final : ScorePass {
      std::vector<double> s;
      std::span<const double> scores() const override { return s; }
      void Backward(std::span<const double>) override {}
    };
    auto pass = std::make_unique<Pass>();
    for (const Document* d : documents) {
      pass->s.push_back(constant_ ? 1.0
                                  : UnitInterval(SeedHasher()
                                                     .Add(seed_)
                                                     .Add(d->text)
                                                     .Add(d->fact_uid)
                                                     .Finish()));
    }
    return pass;
  }
  std::vector<nn::Parameter*> Parameters(ParameterGroup) override {
    return {};
  }
  std::size_t ParameterCount() const override { return 0; }
  std::unique_ptr<ModelBackend> Clone() const override {
    return std::make_unique<FakeScorer>(seed_, constant_);
  }
  void Save(const std::filesystem::path&) const override {}
  json Manifest() const override { return json::object(); }

 private:
  std::string id_ = "fake";
  std::uint64_t seed_;
  bool constant_;
  Tokenizer tokenizer_;
};

TEST(GapTest, WorkedExample) {
  const GapReport r = ComputeGaps(0.34, 0.5);
  EXPECT_NEAR(r.usable_knowledge, 0.17, 1e-15);
  EXPECT_NEAR(r.gap1, 0.66, 1e-15);
  EXPECT_NEAR(r.gap2, 0.17, 1e-15);
  const GapReport edge = ComputeGaps(1.0, 0.0);
  EXPECT_EQ(edge.gap1, 0.0);
  EXPECT_EQ(edge.gap2, 1.0);
  EXPECT_THROW(ComputeGaps(1.1, 0.5), Error);
  EXPECT_THROW(ComputeGaps(0.5, std::nan("")), Error);
  EXPECT_EQ(GapReport::FromJson(r.ToJson()).ToJson(), r.ToJson());
}

TEST(GapTest, PartsSumToOne) {
  Rng rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const GapReport r = ComputeGaps(unit(rng), unit(rng));
    ASSERT_NEAR(r.gap1 + r.gap2 + r.usable_knowledge, 1.0, 1e-12);
    ASSERT_GE(r.gap2, 0.0);
  }
}

TEST(GoldRankTest, TiesCountAgainstGold) {
  EXPECT_EQ(GoldRank(std::vector<double>{1.0, 0.5, 0.2}, 0), 1u);
  EXPECT_EQ(GoldRank(std::vector<double>{1.0, 1.0, 0.2}, 0), 2u);
  EXPECT_EQ(GoldRank(std::vector<double>(5, 0.0), 0), 5u);
  EXPECT_EQ(GoldRank(std::vector<double>{0.1, 0.5, 0.2}, 0), 3u);
  EXPECT_THROW(GoldRank(std::vector<double>{0.1}, 1), Error);
  EXPECT_THROW(GoldRank(std::vector<double>{0.1, std::nan("")}, 0), Error);
}

TEST(GoldRankTest, IndependentOfNegativeOrder) {
  Rng rng(4);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(9);
    for (double& x : s) x = level(rng);
    const std::size_t rank = GoldRank(s, 0);
    std::vector<double> rest(s.begin() + 1, s.end());
    Shuffle(rest, rng);
    std::vector<double> t = {s[0]};
    t.insert(t.end(), rest.begin(), rest.end());
    EXPECT_EQ(GoldRank(t, 0), rank);
    // Same candidates with the gold moved to the back.
    std::rotate(t.begin(), t.begin() + 1, t.end());
    EXPECT_EQ(GoldRank(t, t.size() - 1), rank);
  }
}

std::vector<RetrievalInstance> EvalInstances() {
  const SyntheticWorld w = testing::World(300, 3, 200, 21, 8);
  return BuildTask(w.facts, w.templates, SplitIid(w.facts, 0.2, 0), {}).eval;
}

TEST(EvaluateTest, ConstantScorerNeverWins) {
  FakeScorer scorer(0, true);
  ScoringHead head(4, 0);
  const auto instances = EvalInstances();
  const RetrievalResult r = EvaluateRetrieval(scorer, head, instances);
  EXPECT_EQ(r.accuracy, 0.0);
  for (const InstanceResult& i : r.instances) EXPECT_EQ(i.rank, i.candidates);
}

TEST(EvaluateTest, RandomScorerMatchesBaseline) {
  const auto instances = EvalInstances();
  ScoringHead head(4, 0);
  double acc = 0.0, baseline = 0.0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    FakeScorer scorer(static_cast<std::uint64_t>(s));
    const RetrievalResult r = EvaluateRetrieval(scorer, head, instances);
    acc += r.accuracy;
    baseline = r.random_baseline;
  }
  acc /= seeds;
  // 1 + 20 + 5 * 50 + 50 candidates.
  EXPECT_NEAR(baseline, 1.0 / 321.0, 1e-12);
  const double n = seeds * static_cast<double>(instances.size());
  EXPECT_NEAR(acc, baseline, 4 * std::sqrt(baseline / n));
}

TEST(EvaluateTest, PerRelationCountsAddUp) {
  FakeScorer scorer(3);
  ScoringHead head(4, 0);
  const auto instances = EvalInstances();
  const RetrievalResult r = EvaluateRetrieval(scorer, head, instances);
  std::size_t total = 0, correct = 0;
  for (const auto& [name, rel] : r.per_relation) {
    total += rel.instances;
    correct += rel.correct;
  }
  EXPECT_EQ(total, instances.size());
  EXPECT_NEAR(static_cast<double>(correct) / total, r.accuracy, 1e-15);
}

RunRecord Record(std::string id, double a, double u, std::uint64_t e = 0) {
  return RunRecord{std::move(id), e, 0, 0, ComputeGaps(a, u), 0.01};
}

TEST(AggregateTest, IdenticalRunsHaveZeroSpread) {
  const std::vector<RunRecord> runs(27, Record("m", 0.34, 0.5));
  const RunSummary s = AggregateRuns(runs, 27);
  EXPECT_TRUE(s.complete);
  EXPECT_EQ(s.metrics.at("usable_knowledge").std, 0.0);
  EXPECT_NEAR(s.metrics.at("usable_knowledge").mean, 0.17, 1e-15);
  EXPECT_EQ(s.metrics.at("random_baseline").mean, 0.01);
  EXPECT_FALSE(AggregateRuns(runs, 28).complete);
}

TEST(AggregateTest, MomentsAndGrouping) {
  const std::vector<RunRecord> runs = {Record("m", 0.5, 0.1, 0),
                                       Record("m", 0.5, 0.2, 0),
                                       Record("m", 0.5, 0.3, 1),
                                       Record("m", 0.5, 0.4, 1)};
  const RunSummary s = AggregateRuns(runs, 0);
  const MetricStats& u = s.metrics.at("downstream_accuracy");
  EXPECT_NEAR(u.mean, 0.25, 1e-15);
  EXPECT_NEAR(u.std, std::sqrt(0.05 / 3.0), 1e-15);
  EXPECT_EQ(u.min, 0.1);
  EXPECT_EQ(u.max, 0.4);
  EXPECT_NEAR(s.by_extraction_seed.at("e1").at("downstream_accuracy"), 0.35,
              1e-15);
  EXPECT_THROW(AggregateRuns(std::vector<RunRecord>{}, 0), Error);
  const std::vector<RunRecord> mixed = {Record("a", 0.5, 0.5),
                                        Record("b", 0.5, 0.5)};
  EXPECT_THROW(AggregateRuns(mixed, 0), Error);
  EXPECT_EQ(Describe(std::vector<double>{2.0}).std, 0.0);
}

}  // namespace
}  // namespace xteval
