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

#include "xteval/orchestrator.h"

#include <set>

#include <fmt/format.h>

#include <gtest/gtest.h>

#include "testing.h"

namespace xteval {
namespace {

namespace fs = std::filesystem;

TEST(StageManifestTest, DetectsEveryKindOfChange) {
  const fs::path dir = testing::TempDir("stage");
  WriteFile(dir / "a.txt", "alpha");
  WriteFile(dir / "sub" / "b.txt", "beta");
  StageManifest m;
  m.stage = "test";
  m.key = "k1";
  WriteStageManifest(dir, m);
  const auto outputs = HashOutputs(dir);
  EXPECT_EQ(outputs.size(), 2u);
  EXPECT_EQ(outputs.at("a.txt"), Sha256Hex("alpha"));
  EXPECT_TRUE(StageIsCurrent(dir, "k1"));
  EXPECT_FALSE(StageIsCurrent(dir, "k2"));

  WriteFile(dir / "a.txt", "changed");
  EXPECT_FALSE(StageIsCurrent(dir, "k1"));
  WriteFile(dir / "a.txt", "alpha");
  EXPECT_TRUE(StageIsCurrent(dir, "k1"));
  WriteFile(dir / "extra.txt", "");
  EXPECT_FALSE(StageIsCurrent(dir, "k1"));
  fs::remove(dir / "extra.txt");
  fs::remove(dir / "sub" / "b.txt");
  EXPECT_FALSE(StageIsCurrent(dir, "k1"));
  EXPECT_FALSE(StageIsCurrent(dir / "missing", "k1"));
}

class GridTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = testing::TempDir(
        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    cfg_ = testing::OracleExperiment(root_, testing::World(600, 4, 200, 10, 1),
                                     0.4, 0.5, 2);
  }

  fs::path RunDir(const std::string& combo,
                  const std::string& variant = "base") const {
    return cfg_.output_root / "oracle" / "runs" / variant / combo;
  }

  fs::path root_;
  ExperimentConfig cfg_;
};

TEST_F(GridTest, CompleteGridAndReports) {
  const RunManifest m = RunExperiment(cfg_);
  ASSERT_EQ(m.grids.size(), 1u);
  const GridResult& g = m.grids[0];
  EXPECT_TRUE(m.complete());
  EXPECT_EQ(g.records.size(), 8u);
  EXPECT_EQ(g.expected_runs, 8u);
  for (const RunRecord& r : g.records) {
    const GapReport& x = r.report;
    EXPECT_NEAR(x.usable_knowledge,
                x.extraction_fraction * x.downstream_accuracy, 1e-15);
    EXPECT_NEAR(x.gap1 + x.gap2 + x.usable_knowledge, 1.0, 1e-12);
  }
  for (const char* f : {"summary.json", "grid.csv", "per_relation.csv",
                        "metrics.svg", "gaps.svg", "summary.txt",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(g.report_dir / f)) << f;
  }
  EXPECT_TRUE(fs::exists(m.report_dir / "experiment.json"));
  const json config = ReadJson(m.report_dir / "config.json");
  EXPECT_FALSE(config.contains("output_root"));
  // Runs of one extraction seed share its extraction fraction.
  std::map<std::uint64_t, std::set<double>> a;
  for (const RunRecord& r : g.records) {
    a[r.extraction_seed].insert(r.report.extraction_fraction);
  }
  for (const auto& [e, values] : a) EXPECT_EQ(values.size(), 1u);
}

TEST_F(GridTest, ResumeOnlyRecomputesWhatChanged) {
  RunExperiment(cfg_);
  const fs::path kept = RunDir("e0-s0-f0") / "manifest.json";
  const fs::path removed = RunDir("e1-s1-f1");
  const fs::path tampered = RunDir("e0-s1-f0") / "eval" / "summary.txt";
  const std::string original = ReadFile(tampered);
  const auto kept_time = fs::last_write_time(kept);
  const json before = ReadJson(removed / "eval" / "metrics.json");

  fs::remove_all(removed);
  WriteFile(tampered, "edited by hand\n");
  const RunManifest m = RunExperiment(cfg_);
  EXPECT_TRUE(m.complete());
  EXPECT_EQ(fs::last_write_time(kept), kept_time);
  EXPECT_EQ(ReadJson(removed / "eval" / "metrics.json"), before);
  EXPECT_EQ(ReadFile(tampered), original);
}

TEST_F(GridTest, ReportReadsFinishedRunsOnly) {
  const RunManifest none = Report(cfg_);
  EXPECT_FALSE(none.complete());
  EXPECT_EQ(none.grids[0].records.size(), 0u);
  EXPECT_EQ(none.grids[0].failures.size(), 8u);

  const RunManifest full = RunExperiment(cfg_);
  fs::remove_all(RunDir("e1-s0-f1"));
  const RunManifest partial = Report(cfg_);
  EXPECT_EQ(partial.grids[0].records.size(), 7u);
  ASSERT_EQ(partial.grids[0].failures.size(), 1u);
  EXPECT_NE(partial.grids[0].failures[0].find("e1-s0-f1"), std::string::npos);
  EXPECT_FALSE(fs::exists(RunDir("e1-s0-f1")));
}

TEST_F(GridTest, FullFractionMatchesBase) {
  const RunManifest base = RunExperiment(cfg_);
  const RunManifest sweep = SweepFraction(cfg_, {1.0});
  ASSERT_EQ(sweep.grids.size(), 1u);
  const auto& a = base.grids[0].records;
  const auto& b = sweep.grids[0].records;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].report.ToJson(), b[i].report.ToJson());
  }
  EXPECT_TRUE(fs::exists(cfg_.output_root / "reports" / "sweep-fraction" /
                         "oracle" / "table.csv"));
}

TEST_F(GridTest, SweepArgumentErrors) {
  EXPECT_THROW(SweepFraction(cfg_, {}), Error);
  EXPECT_THROW(SweepFraction(cfg_, {0.0}), Error);
  EXPECT_THROW(SweepFraction(cfg_, {0.5, 1.5}), Error);
  EXPECT_THROW(SweepNegatives(cfg_, {}), Error);
  EXPECT_THROW(SweepNegatives(cfg_, {2, 0}), Error);
  EXPECT_THROW(SweepBackends(cfg_, {}), Error);
  EXPECT_THROW(SweepBackends(cfg_, {"oracle", "oracle"}), Error);
  EXPECT_THROW(SweepBackends(cfg_, {"no-such-backend"}), Error);
}

TEST_F(GridTest, OodSplitReportsTestRelationsOnly) {
  cfg_.split_kind = SplitKind::kOodRelation;
  cfg_.extraction_seeds = {0};
  cfg_.split_seeds = {0};
  cfg_.finetune_seeds = {0};
  const RunManifest m = RunExperiment(cfg_);
  ASSERT_TRUE(m.complete());
  const TaskSplit split = TaskSplit::FromJson(
      ReadJson(cfg_.output_root / "oracle" / "tasks" / "base" / "e0-s0" /
               "split.json"));
  std::set<std::string> seen;
  for (const auto& [r, stats] : m.grids[0].relation_accuracy) seen.insert(r);
  EXPECT_EQ(seen, std::set<std::string>(split.test_relations.begin(),
                                        split.test_relations.end()));
  EXPECT_EQ(split.train_relations.size() + split.test_relations.size(), 4u);
}

TEST_F(GridTest, SweepBackendsKeepsGapArithmetic) {
  cfg_.extraction_seeds = {0};
  cfg_.backends.push_back(BackendSpec::FromJson(
      json{{"id", "weak"},
           {"type", "oracle"},
           {"options", {{"knowledge_rate", 0.2}, {"utilization_rate", 0.3}}}}));
  const RunManifest m = SweepBackends(cfg_, {"oracle", "weak"});
  ASSERT_EQ(m.grids.size(), 2u);
  EXPECT_TRUE(m.complete());
  for (const GridResult& g : m.grids) {
    const auto& s = g.summary.metrics;
    EXPECT_NEAR(s.at("gap1").mean + s.at("gap2").mean +
                    s.at("usable_knowledge").mean,
                1.0, 1e-12);
  }
  EXPECT_LT(m.grids[1].summary.metrics.at("extraction_fraction").mean,
            m.grids[0].summary.metrics.at("extraction_fraction").mean);
  EXPECT_TRUE(fs::exists(cfg_.output_root / "reports" / "sweep-backends" /
                         "backends" / "gaps.svg"));
}

TEST_F(GridTest, WorkersDoNotChangeResults) {
  const RunManifest serial = RunExperiment(cfg_);
  ExperimentConfig parallel = cfg_;
  parallel.workers = 3;
  parallel.output_root = root_ / "parallel";
  const RunManifest m = RunExperiment(parallel);
  ASSERT_EQ(m.grids[0].records.size(), serial.grids[0].records.size());
  for (const RunRecord& r : serial.grids[0].records) {
    const std::string combo = fmt::format(
        "e{}-s{}-f{}", r.extraction_seed, r.split_seed, r.finetune_seed);
    for (const char* f : {"eval/metrics.json", "eval/ranks.jsonl"}) {
      EXPECT_EQ(ReadFile(RunDir(combo) / f),
                ReadFile(parallel.output_root / "oracle" / "runs" / "base" /
                         combo / f))
          << combo << " " << f;
    }
  }
}

TEST_F(GridTest, TooFewSnapshotFactsFailsTheGridNotTheProcess) {
  cfg_.backends[0].options["knowledge_rate"] = 0.0;
  const RunManifest m = RunExperiment(cfg_);
  EXPECT_FALSE(m.complete());
  EXPECT_EQ(m.grids[0].records.size(), 0u);
  EXPECT_EQ(m.grids[0].failures.size(), 8u);
}

}  // namespace
}  // namespace xteval
