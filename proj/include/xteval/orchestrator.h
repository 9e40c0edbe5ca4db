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

// Seed grids, stage caching and reports.
//
// Layout under the output root:
//   backends/<id>/                         prepared backend
//   <id>/extract/e<E>/                     soft prompts + knowledge snapshot
//   <id>/tasks/<variant>/e<E>-s<S>/        split, task instances, templates
//   <id>/runs/<variant>/e<E>-s<S>-f<F>/    train/ and eval/
//   reports/<name>/                        tables and plots
//
// Every stage directory holds a manifest.json recording its cache key, the
// hashes of its inputs and of every file it wrote. A stage is skipped when
// the key matches and all recorded hashes verify.

#ifndef XTEVAL_ORCHESTRATOR_H_
#define XTEVAL_ORCHESTRATOR_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xteval/config.h"
#include "xteval/evaluator.h"
#include "xteval/extractor.h"
#include "xteval/taskforge.h"
#include "xteval/trainer.h"

namespace xteval {

struct StageManifest {
  std::string stage;
  std::string key;
  json inputs = json::object();   // name -> sha256
  json config = json::object();
  json seeds = json::object();
  std::string code_version{kCodeVersion};
  double wall_clock_seconds = 0.0;
  std::map<std::string, std::string> outputs;  // relative path -> sha256

  json ToJson() const;
  static StageManifest FromJson(const json& j);
};

// Hashes every regular file under `dir` except manifest.json.
std::map<std::string, std::string> HashOutputs(const std::filesystem::path& dir);
// Fills in the output hashes and writes dir/manifest.json.
void WriteStageManifest(const std::filesystem::path& dir, StageManifest m);
// True when dir/manifest.json carries `key` and every output verifies.
// Mismatches are logged.
bool StageIsCurrent(const std::filesystem::path& dir, const std::string& key);

// Single-stage entry points, shared by the grid and the CLI verbs.

// Filters the diagnostic to single-token tails, trains prompts on a
// holdout of `prompt_facts` and writes prompts.json plus the snapshot.
KnowledgeSnapshot RunExtraction(const ModelBackend& backend,
                                const FactSet& prompt_facts,
                                const FactSet& diagnostic,
                                const ExtractionConfig& cfg,
                                std::uint64_t seed,
                                const std::filesystem::path& dir);

struct TaskOptions {
  SplitKind split_kind = SplitKind::kIid;
  double split_ratio = 0.6;
  TaskGenConfig gen;
  double snapshot_fraction = 1.0;

  json ToJson() const;
};

TaskBundle RunTaskBuild(const KnowledgeSnapshot& snapshot,
                        const TemplatePack& pack, const TaskOptions& options,
                        std::uint64_t split_seed,
                        const std::filesystem::path& dir);

// Writes train/{config.json, metrics_epochs.jsonl, rng.json, checkpoint/}.
FinetunedModel RunTraining(std::unique_ptr<ModelBackend> backend,
                           const TaskBundle& task, const TemplatePack& pack,
                           const FinetuneConfig& cfg, std::uint64_t seed,
                           const std::filesystem::path& run_dir);

// Reloads the checkpoint written by RunTraining. Backends that were not
// trained (the oracle) are read from `backend_dir`.
FinetunedModel LoadTrainedModel(const std::filesystem::path& run_dir,
                                const std::filesystem::path& backend_dir);

struct RunLabels {
  std::string backend_id;
  std::uint64_t extraction_seed = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t finetune_seed = 0;
};

// Writes eval/{metrics.json, ranks.jsonl, summary.txt}.
RunRecord RunEvaluation(FinetunedModel& model, const TaskBundle& task,
                        double extraction_fraction, const RunLabels& labels,
                        const std::filesystem::path& run_dir);
RunRecord ReadRunRecord(const std::filesystem::path& run_dir);

// One backend's seed grid under one variant.
struct GridResult {
  std::string backend_id;
  std::string variant;
  std::vector<RunRecord> records;
  std::vector<std::string> failures;
  std::size_t expected_runs = 0;
  RunSummary summary;
  // Downstream accuracy per relation across the finished runs.
  std::map<std::string, MetricStats> relation_accuracy;
  std::filesystem::path report_dir;

  bool complete() const {
    return failures.empty() && records.size() == expected_runs;
  }
  json ToJson() const;
};

struct RunManifest {
  std::string name;
  std::vector<GridResult> grids;
  std::filesystem::path report_dir;

  bool complete() const;
  json ToJson() const;
};

RunManifest RunExperiment(const ExperimentConfig& cfg);
RunManifest SweepFraction(const ExperimentConfig& cfg,
                          const std::vector<double>& fractions);
RunManifest SweepNegatives(const ExperimentConfig& cfg,
                           const std::vector<int>& counts);
RunManifest SweepBackends(const ExperimentConfig& cfg,
                          const std::vector<std::string>& ids);
// Rebuilds the report of the base grid from finished run directories.
RunManifest Report(const ExperimentConfig& cfg);

std::filesystem::path BackendDir(const std::filesystem::path& root,
                                 const std::string& id);

}  // namespace xteval

#endif  // XTEVAL_ORCHESTRATOR_H_
