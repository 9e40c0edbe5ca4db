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

// Command-line entry point. Exit codes: 0 success, 2 partial grid, 1 fatal.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "xteval/config.h"
#include "xteval/orchestrator.h"
#include "xteval/registry.h"
#include "xteval/synthetic.h"

namespace fs = std::filesystem;
using namespace xteval;

namespace {

constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

BackendSpec SpecFrom(const std::string& id, const std::string& spec_file) {
  if (!spec_file.empty()) {
    BackendSpec spec = BackendSpec::FromJson(ReadJson(spec_file));
    if (spec.id != id) {
      throw Error(fmt::format("--backend '{}' does not match the id '{}' in {}",
                              id, spec.id, spec_file));
    }
    return spec;
  }
  return BuiltinBackendSpec(id);
}

int Finish(const RunManifest& m) {
  for (const GridResult& g : m.grids) {
    const auto it = g.summary.metrics.find("downstream_accuracy");
    std::cout << fmt::format("{} [{}]: {}/{} runs", g.backend_id, g.variant,
                             g.records.size(), g.expected_runs);
    if (it != g.summary.metrics.end()) {
      const auto& a = g.summary.metrics.at("extraction_fraction");
      const auto& k = g.summary.metrics.at("usable_knowledge");
      std::cout << fmt::format(
          "  extraction {:.4f}  downstream {:.4f} (std {:.4f})  usable {:.4f}",
          a.mean, it->second.mean, it->second.std, k.mean);
    }
    std::cout << "\n";
    for (const std::string& f : g.failures) std::cout << "  failed " << f << "\n";
  }
  std::cout << "report: " << m.report_dir.string() << "\n";
  return m.complete() ? 0 : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge extraction and utilization evaluation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // extract
  auto* extract = app.add_subcommand("extract", "Extract a knowledge snapshot");
  std::string backend_id, backend_spec, diagnostic, templates, out,
      prompt_train, extraction_cfg, fact_format = "lama_jsonl";
  std::uint64_t seed = 0;
  fs::path backend_dir;
  extract->add_option("--backend", backend_id, "Backend id")->required();
  extract->add_option("--backend-spec", backend_spec,
                      "JSON file with {id, type, options}");
  extract->add_option("--diagnostic", diagnostic, "Diagnostic facts")
      ->required()->check(CLI::ExistingFile);
  extract->add_option("--format", fact_format,
                      "lama_jsonl | tsv | canonical");
  extract->add_option("--templates", templates, "Template pack")
      ->required()->check(CLI::ExistingFile);
  extract->add_option("--prompt-train", prompt_train,
                      "Facts for prompt training (default: diagnostic)")
      ->check(CLI::ExistingFile);
  extract->add_option("--extraction-config", extraction_cfg,
                      "JSON file overriding extraction hyperparameters")
      ->check(CLI::ExistingFile);
  extract->add_option("--backend-dir", backend_dir,
                      "Prepared-backend cache (default <out>/backend)");
  extract->add_option("--seed", seed, "Extraction seed");
  extract->add_option("--out", out, "Output directory")->required();

  // build-task
  auto* build = app.add_subcommand("build-task", "Split a snapshot and build tasks");
  std::string snapshot_dir, split_kind = "iid";
  double ratio = 0.6, fraction = 1.0;
  int negatives = 4;
  build->add_option("--snapshot", snapshot_dir, "Snapshot directory")
      ->required()->check(CLI::ExistingDirectory);
  build->add_option("--templates", templates, "Template pack")
      ->required()->check(CLI::ExistingFile);
  build->add_option("--split", split_kind, "iid | ood");
  build->add_option("--ratio", ratio, "Train share");
  build->add_option("--negatives-per-type", negatives,
                    "Training negatives per type");
  build->add_option("--fraction", fraction, "Snapshot subsample fraction");
  build->add_option("--seed", seed, "Split seed");
  build->add_option("--out", out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Finetune a retrieval scorer");
  std::string task_dir, finetune_cfg;
  train->add_option("--task", task_dir, "Task directory")
      ->required()->check(CLI::ExistingDirectory);
  train->add_option("--backend", backend_id, "Backend id")->required();
  train->add_option("--backend-spec", backend_spec, "Backend spec JSON");
  train->add_option("--backend-dir", backend_dir,
                    "Prepared backend (required for trainable backends)");
  train->add_option("--finetune-config", finetune_cfg,
                    "JSON file overriding finetuning hyperparameters")
      ->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Finetune seed");
  train->add_option("--out", out, "Run directory")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained run");
  std::string run_dir;
  std::optional<double> extraction_fraction;
  evaluate->add_option("--run", run_dir, "Run directory")
      ->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--task", task_dir, "Task directory")
      ->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--backend-dir", backend_dir,
                       "Backend used when the run saved no model");
  evaluate->add_option("--extraction-fraction", extraction_fraction,
                       "Override a (default: the task's snapshot)");

  // grid verbs
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")
        ->required()->check(CLI::ExistingFile);
  };
  auto* run = app.add_subcommand("run", "Run the full seed grid");
  add_config(run);
  auto* sweep_fraction =
      app.add_subcommand("sweep-fraction", "Vary the snapshot fraction");
  add_config(sweep_fraction);
  std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
  sweep_fraction->add_option("--fractions", fractions)->delimiter(',');
  auto* sweep_negatives =
      app.add_subcommand("sweep-negatives", "Vary negatives per type");
  add_config(sweep_negatives);
  std::vector<int> counts = {2, 4, 10};
  sweep_negatives->add_option("--counts", counts)->delimiter(',');
  auto* sweep_backends =
      app.add_subcommand("sweep-backends", "Compare backends");
  add_config(sweep_backends);
  std::vector<std::string> ids;
  sweep_backends->add_option("--backends", ids, "Backend ids")
      ->required()->delimiter(',');
  auto* report = app.add_subcommand("report", "Rebuild the grid report");
  add_config(report);

  auto* synth = app.add_subcommand("make-synthetic",
                                   "Write a synthetic fact corpus");
  SyntheticOptions synth_opts;
  synth->add_option("--facts", synth_opts.facts);
  synth->add_option("--relations", synth_opts.relations);
  synth->add_option("--heads", synth_opts.heads);
  synth->add_option("--tails-per-relation", synth_opts.tails_per_relation);
  synth->add_option("--seed", synth_opts.seed);
  synth->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (extract->parsed()) {
      const BackendSpec spec = SpecFrom(backend_id, backend_spec);
      const TemplatePack pack = TemplatePack::Load(templates);
      const FactSet diag = LoadFacts(diagnostic, ParseFactFormat(fact_format));
      const FactSet prompts =
          prompt_train.empty()
              ? diag
              : LoadFacts(prompt_train, ParseFactFormat(fact_format));
      pack.RequireCoverage(diag);
      std::vector<Fact> all = diag.facts();
      all.insert(all.end(), prompts.facts().begin(), prompts.facts().end());
      if (backend_dir.empty()) backend_dir = fs::path(out) / "backend";
      auto backend = PrepareBackend(spec, FactSet(std::move(all), "corpus"),
                                    pack, backend_dir);
      const ExtractionConfig cfg =
          extraction_cfg.empty()
              ? ExtractionConfig{}
              : ExtractionConfig::FromJson(ReadJson(extraction_cfg));
      const fs::path dir = fs::path(out) / "snapshot";
      const KnowledgeSnapshot snap =
          RunExtraction(*backend, prompts, diag, cfg, seed, dir);
      StageManifest m;
      m.stage = "extract";
      m.key = Sha256Hex(json{{"backend", spec.ToJson()},
                             {"diagnostic", Sha256File(diagnostic)},
                             {"config", cfg.ToJson()},
                             {"seed", seed}}
                            .dump());
      m.config = cfg.ToJson();
      m.seeds = json{{"extraction", seed}};
      WriteStageManifest(dir, std::move(m));
      std::cout << fmt::format("extracted {}/{} facts ({:.4f}) -> {}\n",
                               snap.facts.size(), snap.diagnostic_size,
                               snap.extraction_fraction, dir.string());
      return 0;
    }
    if (build->parsed()) {
      const KnowledgeSnapshot snap = LoadSnapshot(snapshot_dir);
      const TemplatePack pack = TemplatePack::Load(templates);
      TaskOptions options;
      options.split_kind = ParseSplitKind(split_kind);
      options.split_ratio = ratio;
      options.gen.negatives_per_type = negatives;
      options.snapshot_fraction = fraction;
      fs::create_directories(out);
      const TaskBundle task = RunTaskBuild(snap, pack, options, seed, out);
      StageManifest m;
      m.stage = "task";
      m.key = Sha256Hex(json{{"snapshot", Sha256File(fs::path(snapshot_dir) /
                                                     "facts.jsonl")},
                             {"options", options.ToJson()},
                             {"seed", seed}}
                            .dump());
      m.config = options.ToJson();
      m.seeds = json{{"split", seed}};
      WriteStageManifest(out, std::move(m));
      std::cout << fmt::format("{} train / {} test instances -> {}\n",
                               task.train.size(), task.eval.size(), out);
      return 0;
    }
    if (train->parsed()) {
      const BackendSpec spec = SpecFrom(backend_id, backend_spec);
      const TaskBundle task = LoadTask(task_dir);
      const TemplatePack pack =
          TemplatePack::Load(fs::path(task_dir) / "templates.jsonl");
      std::unique_ptr<ModelBackend> backend;
      if (!backend_dir.empty()) {
        backend = LoadBackend(backend_dir);
        if (backend->id() != spec.id) {
          throw Error(fmt::format("backend in {} is '{}', not '{}'",
                                  backend_dir.string(), backend->id(), spec.id));
        }
      } else if (spec.type == "oracle") {
        backend = CreateBackend(spec, task.snapshot, pack);
      } else {
        throw Error("--backend-dir is required for backend type " + spec.type);
      }
      const FinetuneConfig cfg =
          finetune_cfg.empty()
              ? FinetuneConfig{}
              : FinetuneConfig::FromJson(ReadJson(finetune_cfg));
      fs::create_directories(out);
      const FinetunedModel model =
          RunTraining(std::move(backend), task, pack, cfg, seed, out);
      std::cout << fmt::format(
          "best epoch {} (validation top-1 {:.4f}) -> {}\n", model.best_epoch,
          model.best_validation_accuracy, out);
      return 0;
    }
    if (evaluate->parsed()) {
      const TaskBundle task = LoadTask(task_dir);
      const json snap = ReadJson(fs::path(task_dir) / "snapshot.json");
      const json train_cfg =
          ReadJson(fs::path(run_dir) / "train" / "config.json");
      FinetunedModel model = LoadTrainedModel(run_dir, backend_dir);
      const double a = extraction_fraction.value_or(
          snap.at("extraction_fraction").get<double>());
      const RunRecord rec = RunEvaluation(
          model, task, a,
          RunLabels{model.backend->id(), snap.at("seed").get<std::uint64_t>(),
                    task.split.seed, train_cfg.at("seed").get<std::uint64_t>()},
          run_dir);
      std::cout << ReadFile(fs::path(run_dir) / "eval" / "summary.txt");
      static_cast<void>(rec);
      return 0;
    }
    if (synth->parsed()) {
      const SyntheticWorld world = MakeSyntheticWorld(synth_opts);
      SaveSyntheticWorld(world, out);
      std::cout << fmt::format("{} facts over {} relations -> {}\n",
                               world.facts.size(),
                               world.facts.relations().size(), out);
      return 0;
    }

    const ExperimentConfig cfg = LoadConfig(config_path);
    if (run->parsed()) return Finish(RunExperiment(cfg));
    if (sweep_fraction->parsed()) return Finish(SweepFraction(cfg, fractions));
    if (sweep_negatives->parsed()) return Finish(SweepNegatives(cfg, counts));
    if (sweep_backends->parsed()) return Finish(SweepBackends(cfg, ids));
    if (report->parsed()) return Finish(Report(cfg));
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFatal;
  }
  return kExitFatal;
}
