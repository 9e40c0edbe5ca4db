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

// Release gate: one PASS or FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "testing.h"
#include "xteval/evaluator.h"
#include "xteval/orchestrator.h"
#include "xteval/taskforge.h"
#include "xteval/trainer.h"

namespace xteval {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome GapAlgebra() {
  const auto start = Clock::now();
  Rng rng(2026);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const GapReport r = ComputeGaps(unit(rng), unit(rng));
    worst = std::max(worst,
                     std::abs(r.gap1 + r.gap2 + r.usable_knowledge - 1.0));
  }
  const double t = Seconds(start);
  return {worst <= 1e-12 && t < 1.0,
          fmt::format("max |sum - 1| = {:.2e}, {:.3f} s", worst, t)};
}

Outcome InfoNceChecks() {
  const auto start = Clock::now();
  double uniform_err = 0.0;
  for (int m : {2, 6, 12, 30}) {
    const std::vector<double> s(m + 1, 0.3);
    uniform_err =
        std::max(uniform_err, std::abs(InfoNceLoss(s) - std::log(m + 1.0)));
  }
  Rng rng(7);
  std::normal_distribution<double> normal(0.0, 1.5);
  std::uniform_int_distribution<int> size(2, 31);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(static_cast<std::size_t>(size(rng)));
    for (double& x : s) x = normal(rng);
    const InfoNceResult r = InfoNce(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double h = 1e-5;
      auto up = s, down = s;
      up[i] += h;
      down[i] -= h;
      const double numeric = (InfoNceLoss(up) - InfoNceLoss(down)) / (2 * h);
      // Relative error, floored so that near-zero gradients are compared
      // on an absolute scale.
      const double rel =
          std::abs(r.grad[i] - numeric) / std::max(std::abs(numeric), 1e-3);
      worst_rel = std::max(worst_rel, rel);
    }
  }
  const double t = Seconds(start);
  return {uniform_err <= 1e-9 && worst_rel <= 1e-5 && t < 10.0,
          fmt::format("uniform err {:.2e}, max grad rel err {:.2e}, {:.3f} s",
                      uniform_err, worst_rel, t)};
}

Outcome GeneratorFidelity() {
  const auto start = Clock::now();
  const SyntheticWorld w = testing::World(1000, 10, 300, 12, 11);
  const DocumentGenerator gen(w.templates, BuildEntityPools(w.facts), w.facts);
  const TaskGenConfig cfg;
  const std::size_t expected =
      static_cast<std::size_t>(cfg.negatives_per_type) *
      kTrainingNegativeTypes.size();
  std::size_t instances = 0, bad = 0, wrong_count = 0;
  std::string first_error;
  for (const Fact& f : w.facts.facts()) {
    const RetrievalInstance inst = BuildTrainInstance(f, cfg, gen, 5, 0);
    ++instances;
    if (inst.negatives.size() != expected) ++wrong_count;
    for (const Document& d : inst.negatives) {
      const std::string err = testing::CheckNegative(d, f, w.templates);
      if (!err.empty()) {
        ++bad;
        if (first_error.empty()) first_error = err;
      }
    }
  }
  const double t = Seconds(start);
  return {instances == 1000 && expected == 12 && bad == 0 &&
              wrong_count == 0 && t < 30.0,
          fmt::format("{} instances, {} negatives each, {} bad documents{}, "
                      "{:.2f} s",
                      instances, expected, bad,
                      first_error.empty() ? "" : " (" + first_error + ")", t)};
}

Outcome EvalBattery() {
  const SyntheticWorld w = testing::World(400, 2, 200, 21, 3);
  const EntityPools pools = BuildEntityPools(w.facts);
  for (const auto& [r, tails] : pools.tails_by_relation) {
    if (tails.size() != 21) {
      return {false, fmt::format("fixture pool of {} has {} tails", r,
                                 tails.size())};
    }
  }
  const DocumentGenerator gen(w.templates, pools, w.facts, &w.facts);
  const TaskGenConfig cfg;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const Fact& f = w.facts.facts()[i];
    const RetrievalInstance inst = BuildEvalInstance(f, cfg, gen, 1);
    std::map<DocType, int> counts;
    std::set<std::string> tails;
    for (const Document& d : inst.negatives) {
      ++counts[d.doc_type];
      if (d.doc_type == DocType::kHR_) tails.insert(*d.substitutions.tail);
    }
    if (counts[DocType::kHR_] != 20 || tails.size() != 20 ||
        tails.count(f.tail) != 0) {
      return {false, fmt::format("{}: {} enumerated tail documents", f.uid,
                                 counts[DocType::kHR_])};
    }
    for (DocType t : cfg.inference_types) {
      if (t == DocType::kHR_) continue;
      if (counts[t] != 50) {
        return {false, fmt::format("{}: {} documents of type {}", f.uid,
                                   counts[t], DocTypeName(t))};
      }
    }
    ++checked;
  }
  return {true, fmt::format("{} instances: 20 enumerated, 50 per sampled type",
                            checked)};
}

// Shared by the end-to-end and ablation criteria.
struct OracleWorld {
  fs::path root;
  ExperimentConfig cfg;
};

OracleWorld MakeOracleWorld() {
  OracleWorld w;
  w.root = testing::TempDir("acceptance-oracle");
  w.cfg = testing::OracleExperiment(
      w.root, testing::World(10000, 10, 2000, 21, 2026), 0.34, 0.5, 3);
  return w;
}

Outcome OracleEndToEnd(const OracleWorld& w) {
  const auto start = Clock::now();
  const RunManifest m = RunExperiment(w.cfg);
  const double t = Seconds(start);
  if (m.grids.size() != 1 || !m.complete()) {
    return {false, "grid incomplete"};
  }
  const auto& s = m.grids[0].summary.metrics;
  const double a = s.at("extraction_fraction").mean;
  const double u = s.at("downstream_accuracy").mean;
  const double k = s.at("usable_knowledge").mean;
  return {m.grids[0].records.size() == 27 && std::abs(a - 0.34) <= 0.02 &&
              std::abs(u - 0.50) <= 0.03 && std::abs(k - 0.17) <= 0.02 &&
              t < 300.0,
          fmt::format("27 runs, a={:.4f} u={:.4f} a*u={:.4f}, {:.1f} s", a, u,
                      k, t)};
}

Outcome Splits() {
  const SyntheticWorld w = testing::World(500, 8, 200, 10, 4);
  const std::size_t n = w.facts.size();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const double ratio = 0.6;
    const TaskSplit s = SplitIid(w.facts, ratio, seed);
    std::set<std::string> train(s.train.begin(), s.train.end());
    std::set<std::string> test(s.test.begin(), s.test.end());
    std::size_t overlap = 0;
    for (const auto& u : test) overlap += train.count(u);
    if (overlap != 0 || train.size() + test.size() != n ||
        train.size() != static_cast<std::size_t>(std::lround(ratio * n))) {
      return {false, fmt::format("iid seed {} violates a split property", seed)};
    }
  }
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const TaskSplit s = SplitOodByRelation(w.facts, 0.6, seed);
    std::set<std::string> train(s.train.begin(), s.train.end());
    std::set<std::string> tr(s.train_relations.begin(), s.train_relations.end());
    std::size_t overlap = 0;
    for (const auto& u : s.test) overlap += train.count(u);
    for (const auto& r : s.test_relations) overlap += tr.count(r);
    std::set<std::string> test_rel_of_facts;
    for (const Fact& f : w.facts.Select(s.test, "t").facts()) {
      test_rel_of_facts.insert(f.relation);
    }
    for (const auto& r : test_rel_of_facts) overlap += tr.count(r);
    if (overlap != 0 || train.size() + s.test.size() != n ||
        tr.size() != 5) {
      return {false, fmt::format("ood seed {} violates a split property", seed)};
    }
  }
  for (std::uint64_t seed : {0, 17, 999}) {
    for (SplitKind kind : {SplitKind::kIid, SplitKind::kOodRelation}) {
      if (MakeSplit(w.facts, kind, 0.6, seed).ToJson().dump() !=
          MakeSplit(w.facts, kind, 0.6, seed).ToJson().dump()) {
        return {false, "identical seeds gave different splits"};
      }
    }
  }
  return {true, "1000 iid + 1000 ood splits, seeded splits byte-identical"};
}

ExperimentConfig TinyExperiment(const fs::path& root) {
  SaveSyntheticWorld(MakeSyntheticWorld(SyntheticOptions{}), root / "world");
  const json j = {
      {"schema_version", kConfigSchemaVersion},
      {"backends", {"tiny-mlm"}},
      {"diagnostic", {{"path", "world/facts.jsonl"}}},
      {"templates", "world/templates.jsonl"},
      {"seeds", {{"extraction", {0}}, {"split", {0, 1}}, {"finetune", {0, 1}}}},
      {"extraction",
       {{"learning_rate", 0.03}, {"batch_size", 8}, {"epochs", 50}}},
      {"finetune",
       {{"learning_rate", 1e-3}, {"batch_size", 8}, {"epochs", 40}}},
      {"output_root", "out"},
  };
  return ParseConfig(j, root);
}

Outcome TinySmoke(const ExperimentConfig& cfg) {
  const auto start = Clock::now();
  const RunManifest m = RunExperiment(cfg);
  const double t = Seconds(start);
  if (m.grids.empty() || m.grids[0].records.empty()) {
    return {false, "no finished runs"};
  }
  const auto& s = m.grids[0].summary.metrics;
  const double u = s.at("downstream_accuracy").mean;
  const double random = s.at("random_baseline").mean;
  return {m.complete() && u >= 5.0 * random && t < 1800.0,
          fmt::format("tiny-mlm top-1 {:.4f} vs random {:.4f} ({:.1f}x), "
                      "a={:.3f}, {:.0f} s",
                      u, random, u / random,
                      s.at("extraction_fraction").mean, t)};
}

// sha256 of every task file and every metrics file under an output root,
// keyed by relative path.
std::map<std::string, std::string> ArtifactHashes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    const std::string name = e.path().filename().string();
    const bool task = rel.find("/tasks/") != std::string::npos &&
                      name != "manifest.json";
    const bool metrics = name == "metrics.json" ||
                         name == "metrics_epochs.jsonl" ||
                         name == "ranks.jsonl";
    if (task || metrics) out[rel] = Sha256Hex(ReadFile(e.path()));
  }
  return out;
}

Outcome Determinism(const ExperimentConfig& first_cfg) {
  const fs::path root = testing::TempDir("acceptance-determinism");
  ExperimentConfig second = TinyExperiment(root);
  RunExperiment(second);
  const auto a = ArtifactHashes(first_cfg.output_root);
  const auto b = ArtifactHashes(second.output_root);
  std::size_t differ = 0;
  std::string example;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second != v) {
      ++differ;
      if (example.empty()) example = k;
    }
  }
  return {!a.empty() && a.size() == b.size() && differ == 0,
          fmt::format("{} task and metrics files compared, {} differ{}",
                      a.size(), differ,
                      example.empty() ? "" : " (first: " + example + ")")};
}

Outcome Ablations(const OracleWorld& w) {
  const auto start = Clock::now();
  ExperimentConfig cfg = w.cfg;
  cfg.extraction_seeds = {0};
  cfg.split_seeds = {0};
  cfg.finetune_seeds = {0, 1, 2};
  const RunManifest neg = SweepNegatives(cfg, {2, 4, 10});
  const RunManifest frac = SweepFraction(cfg, {0.2, 0.4, 0.6, 0.8, 1.0});
  const double u = w.cfg.backends[0].options.value("utilization_rate", 0.5);
  std::vector<std::string> parts;
  bool ok = neg.complete() && frac.complete() && neg.grids.size() == 3 &&
            frac.grids.size() == 5;
  for (const RunManifest* m : {&neg, &frac}) {
    for (const GridResult& g : m->grids) {
      // Each evaluated instance is an independent utilization draw, so the
      // pooled accuracy is binomial around u.
      std::size_t n = 0;
      for (const RunRecord& r : g.records) {
        const fs::path run = cfg.output_root / "oracle" / "runs" / g.variant /
                             fmt::format("e{}-s{}-f{}", r.extraction_seed,
                                         r.split_seed, r.finetune_seed);
        std::size_t lines = 0;
        ForEachJsonLine(run / "eval" / "ranks.jsonl",
                        [&](std::size_t, const json&) { ++lines; });
        n += lines;
      }
      const double mean = g.summary.metrics.at("downstream_accuracy").mean;
      const double tol = 4.0 * std::sqrt(u * (1 - u) / std::max<double>(n, 1));
      ok = ok && n > 0 && std::abs(mean - u) <= tol;
      parts.push_back(fmt::format("{}={:.3f}(+-{:.3f})", g.variant, mean, tol));
    }
  }
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : " ") + p;
  return {ok, fmt::format("{}, {:.1f} s", detail, Seconds(start))};
}

int Main() {
  spdlog::set_level(spdlog::level::warn);
  int failures = 0;
  auto report = [&](int id, const char* name,
                    const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name,
                o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gap algebra", GapAlgebra);
  report(2, "infonce", InfoNceChecks);
  report(3, "generator fidelity", GeneratorFidelity);
  report(4, "evaluation battery", EvalBattery);
  const OracleWorld oracle = MakeOracleWorld();
  report(5, "oracle end-to-end", [&] { return OracleEndToEnd(oracle); });
  report(6, "splits", Splits);
  const fs::path tiny_root = testing::TempDir("acceptance-tiny");
  const ExperimentConfig tiny = TinyExperiment(tiny_root);
  report(7, "tiny model smoke", [&] { return TinySmoke(tiny); });
  report(8, "determinism", [&] { return Determinism(tiny); });
  report(9, "ablation plumbing", [&] { return Ablations(oracle); });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace xteval

int main() { return xteval::Main(); }
