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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "xteval/plot.h"
#include "xteval/registry.h"

namespace xteval {
namespace fs = std::filesystem;
namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kManifestFile = "manifest.json";

std::string KeyOf(const json& j) { return Sha256Hex(j.dump()); }

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string UidDigest(const FactSet& facts) {
  std::string all;
  for (const Fact& f : facts.facts()) {
    all += f.uid;
    all += '\n';
  }
  return Sha256Hex(all);
}

void ParallelFor(std::size_t n, int workers,
                 const std::function<void(std::size_t)>& fn) {
  const auto threads_wanted =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads_wanted <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < threads_wanted; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) fn(i);
    });
  }
  for (std::thread& t : threads) t.join();
}

void ResetDir(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
}

json TraceLine(const EpochMetrics& m) {
  json j{{"epoch", m.epoch},
         {"train_loss", nullptr},
         {"validation_accuracy", m.validation_accuracy}};
  if (std::isfinite(m.train_loss)) j["train_loss"] = m.train_loss;
  return j;
}

// Immutable inputs for one backend's grids.
struct Inputs {
  const ExperimentConfig* cfg = nullptr;
  BackendSpec spec;
  TemplatePack pack;
  FactSet diagnostic;
  FactSet prompt_facts;
  std::string diagnostic_digest;
  std::string prompt_digest;
  std::string backend_key;
  fs::path backend_dir;
  std::unique_ptr<ModelBackend> backend;  // null in report-only mode
};

struct SharedData {
  TemplatePack pack;
  FactSet diagnostic;
  FactSet prompt_facts;
};

SharedData LoadShared(const ExperimentConfig& cfg) {
  cfg.Validate();
  SharedData d;
  d.pack = TemplatePack::Load(cfg.templates);
  d.diagnostic = LoadFacts(cfg.diagnostic.path, cfg.diagnostic.format);
  d.prompt_facts = cfg.prompt_train ? LoadFacts(cfg.prompt_train->path,
                                                cfg.prompt_train->format)
                                    : d.diagnostic;
  if (d.diagnostic.empty()) throw Error("diagnostic set is empty");
  d.pack.RequireCoverage(d.diagnostic);
  d.pack.RequireCoverage(d.prompt_facts);
  return d;
}

FactSet Corpus(const SharedData& d) {
  std::vector<Fact> all = d.diagnostic.facts();
  for (const Fact& f : d.prompt_facts.facts()) all.push_back(f);
  return FactSet(std::move(all), "corpus");
}

Inputs PrepareInputs(const ExperimentConfig& cfg, const SharedData& d,
                     const BackendSpec& spec, bool load_backend) {
  Inputs in;
  in.cfg = &cfg;
  in.spec = spec;
  in.pack = d.pack;
  in.diagnostic = d.diagnostic;
  in.prompt_facts = d.prompt_facts;
  in.diagnostic_digest = UidDigest(d.diagnostic);
  in.prompt_digest = UidDigest(d.prompt_facts);
  const FactSet corpus = Corpus(d);
  in.backend_key = BackendKey(spec, corpus, d.pack);
  const fs::path stage_dir = cfg.output_root / "backends" / spec.id;
  in.backend_dir = BackendDir(cfg.output_root, spec.id);
  if (!load_backend) return in;

  if (StageIsCurrent(stage_dir, in.backend_key)) {
    try {
      in.backend = LoadBackend(in.backend_dir);
      return in;
    } catch (const Error& e) {
      spdlog::warn("cached backend {} unreadable ({}); rebuilding", spec.id,
                   e.what());
    }
  }
  const auto start = Clock::now();
  ResetDir(stage_dir);
  in.backend = CreateBackend(spec, corpus, d.pack);
  fs::create_directories(in.backend_dir);
  in.backend->Save(in.backend_dir);
  StageManifest m;
  m.stage = "backend";
  m.key = in.backend_key;
  m.inputs = json{{"corpus", UidDigest(corpus)},
                  {"templates", d.pack.version()}};
  m.config = spec.ToJson();
  m.wall_clock_seconds = SecondsSince(start);
  WriteStageManifest(stage_dir, std::move(m));
  return in;
}

std::string ExtractKey(const Inputs& in, std::uint64_t seed) {
  return KeyOf(json{{"stage", "extract"},
                    {"backend", in.backend_key},
                    {"diagnostic", in.diagnostic_digest},
                    {"prompt_facts", in.prompt_digest},
                    {"config", in.cfg->extraction.ToJson()},
                    {"seed", seed},
                    {"code", kCodeVersion}});
}

std::string TaskKey(const Inputs& in, const std::string& extract_key,
                    const TaskOptions& options, std::uint64_t seed) {
  return KeyOf(json{{"stage", "task"},
                    {"extract", extract_key},
                    {"templates", in.pack.version()},
                    {"options", options.ToJson()},
                    {"seed", seed},
                    {"code", kCodeVersion}});
}

std::string RunKey(const Inputs& in, const std::string& task_key,
                   std::uint64_t seed) {
  return KeyOf(json{{"stage", "run"},
                    {"task", task_key},
                    {"backend", in.backend_key},
                    {"finetune", in.cfg->finetune.ToJson()},
                    {"seed", seed},
                    {"code", kCodeVersion}});
}

TaskOptions OptionsFrom(const ExperimentConfig& cfg) {
  TaskOptions o;
  o.split_kind = cfg.split_kind;
  o.split_ratio = cfg.split_ratio;
  o.gen = cfg.task;
  o.snapshot_fraction = cfg.snapshot_fraction;
  return o;
}

std::map<std::string, double> ReadRelationAccuracy(const fs::path& run_dir) {
  const json m = ReadJson(run_dir / "eval" / "metrics.json");
  std::map<std::string, double> out;
  for (const auto& [r, v] : m.at("retrieval").at("per_relation").items()) {
    out[r] = v.at("accuracy").get<double>();
  }
  return out;
}

struct Slot {
  std::optional<RunRecord> record;
  std::map<std::string, double> relations;
  std::string failure;
};

// Runs (or, with compute == false, only collects) one backend's grid.
GridResult RunGrid(const Inputs& in, const std::string& variant,
                   const TaskOptions& options, bool compute) {
  const ExperimentConfig& cfg = *in.cfg;
  const auto& es = cfg.extraction_seeds;
  const auto& ss = cfg.split_seeds;
  const auto& fs_ = cfg.finetune_seeds;
  const fs::path base = cfg.output_root / in.spec.id;

  GridResult grid;
  grid.backend_id = in.spec.id;
  grid.variant = variant;
  grid.expected_runs = es.size() * ss.size() * fs_.size();
  std::vector<Slot> slots(grid.expected_runs);
  auto slot_of = [&](std::size_t e, std::size_t s, std::size_t f) -> Slot& {
    return slots[(e * ss.size() + s) * fs_.size() + f];
  };
  auto combo = [&](std::size_t e, std::size_t s, std::size_t f) {
    return fmt::format("e{}-s{}-f{}", es[e], ss[s], fs_[f]);
  };

  std::vector<std::string> extract_keys(es.size());
  std::vector<std::optional<KnowledgeSnapshot>> snapshots(es.size());
  std::vector<std::string> extract_errors(es.size());
  for (std::size_t e = 0; e < es.size(); ++e) {
    extract_keys[e] = ExtractKey(in, es[e]);
  }

  if (compute) {
    ParallelFor(es.size(), cfg.workers, [&](std::size_t e) {
      const fs::path dir = base / "extract" / fmt::format("e{}", es[e]);
      try {
        if (StageIsCurrent(dir, extract_keys[e])) {
          snapshots[e] = LoadSnapshot(dir);
          return;
        }
        const auto start = Clock::now();
        ResetDir(dir);
        spdlog::info("{}: extracting knowledge with seed {}", in.spec.id,
                     es[e]);
        snapshots[e] = RunExtraction(*in.backend, in.prompt_facts,
                                     in.diagnostic, cfg.extraction, es[e], dir);
        StageManifest m;
        m.stage = "extract";
        m.key = extract_keys[e];
        m.inputs = json{{"backend", in.backend_key},
                        {"diagnostic", in.diagnostic_digest},
                        {"prompt_facts", in.prompt_digest}};
        m.config = cfg.extraction.ToJson();
        m.seeds = json{{"extraction", es[e]}};
        m.wall_clock_seconds = SecondsSince(start);
        WriteStageManifest(dir, std::move(m));
      } catch (const std::exception& ex) {
        extract_errors[e] = ex.what();
        spdlog::error("{}: extraction e{} failed: {}", in.spec.id, es[e],
                      ex.what());
      }
    });
  }

  ParallelFor(es.size() * ss.size(), cfg.workers, [&](std::size_t g) {
    const std::size_t e = g / ss.size();
    const std::size_t s = g % ss.size();
    auto fail_all = [&](const std::string& why) {
      for (std::size_t f = 0; f < fs_.size(); ++f) {
        slot_of(e, s, f).failure = combo(e, s, f) + ": " + why;
      }
    };
    if (!extract_errors[e].empty()) {
      fail_all("extraction failed: " + extract_errors[e]);
      return;
    }
    const std::string task_key = TaskKey(in, extract_keys[e], options, ss[s]);
    const fs::path task_dir = base / "tasks" / variant /
                              fmt::format("e{}-s{}", es[e], ss[s]);
    std::optional<TaskBundle> task;
    if (compute && !StageIsCurrent(task_dir, task_key)) {
      try {
        const auto start = Clock::now();
        ResetDir(task_dir);
        task = RunTaskBuild(*snapshots[e], in.pack, options, ss[s], task_dir);
        StageManifest m;
        m.stage = "task";
        m.key = task_key;
        m.inputs = json{{"extract", extract_keys[e]},
                        {"templates", in.pack.version()}};
        m.config = options.ToJson();
        m.seeds = json{{"extraction", es[e]}, {"split", ss[s]}};
        m.wall_clock_seconds = SecondsSince(start);
        WriteStageManifest(task_dir, std::move(m));
      } catch (const std::exception& ex) {
        spdlog::error("{}: task e{}-s{} failed: {}", in.spec.id, es[e], ss[s],
                      ex.what());
        fail_all(std::string("task build failed: ") + ex.what());
        return;
      }
    }
    for (std::size_t f = 0; f < fs_.size(); ++f) {
      Slot& slot = slot_of(e, s, f);
      const std::string run_key = RunKey(in, task_key, fs_[f]);
      const fs::path run_dir = base / "runs" / variant / combo(e, s, f);
      try {
        if (!StageIsCurrent(run_dir, run_key)) {
          if (!compute) throw Error("no finished run");
          if (!task) task = LoadTask(task_dir);
          const auto start = Clock::now();
          ResetDir(run_dir);
          spdlog::info("{} [{}]: finetuning {}", in.spec.id, variant,
                       combo(e, s, f));
          FinetunedModel model = RunTraining(in.backend->Clone(), *task,
                                             in.pack, cfg.finetune, fs_[f],
                                             run_dir);
          RunEvaluation(model, *task, snapshots[e]->extraction_fraction,
                        RunLabels{in.spec.id, es[e], ss[s], fs_[f]}, run_dir);
          StageManifest m;
          m.stage = "run";
          m.key = run_key;
          m.inputs = json{{"task", task_key}, {"backend", in.backend_key}};
          m.config = cfg.finetune.ToJson();
          m.seeds = json{{"extraction", es[e]},
                         {"split", ss[s]},
                         {"finetune", fs_[f]}};
          m.wall_clock_seconds = SecondsSince(start);
          WriteStageManifest(run_dir, std::move(m));
        }
        slot.record = ReadRunRecord(run_dir);
        slot.relations = ReadRelationAccuracy(run_dir);
      } catch (const std::exception& ex) {
        slot.failure = combo(e, s, f) + ": " + ex.what();
        if (compute) {
          spdlog::error("{}: run {} failed: {}", in.spec.id, combo(e, s, f),
                        ex.what());
        }
      }
    }
  });

  std::map<std::string, std::vector<double>> by_relation;
  for (Slot& slot : slots) {
    if (slot.record) {
      grid.records.push_back(*slot.record);
      for (const auto& [r, acc] : slot.relations) by_relation[r].push_back(acc);
    } else {
      grid.failures.push_back(slot.failure);
    }
  }
  for (const auto& [r, values] : by_relation) {
    grid.relation_accuracy[r] = Describe(values);
  }
  if (!grid.records.empty()) {
    grid.summary = AggregateRuns(grid.records, grid.expected_runs);
  } else {
    grid.summary.backend_id = grid.backend_id;
    grid.summary.expected_runs = grid.expected_runs;
  }
  return grid;
}

std::vector<std::string> RecordRow(const RunRecord& r) {
  return {std::to_string(r.extraction_seed),
          std::to_string(r.split_seed),
          std::to_string(r.finetune_seed),
          FormatDouble(r.report.extraction_fraction, 6),
          FormatDouble(r.report.downstream_accuracy, 6),
          FormatDouble(r.report.usable_knowledge, 6),
          FormatDouble(r.report.gap1, 6),
          FormatDouble(r.report.gap2, 6),
          FormatDouble(r.random_baseline, 6)};
}

const MetricStats& Metric(const GridResult& g, const char* name) {
  static const MetricStats kEmpty;
  auto it = g.summary.metrics.find(name);
  return it == g.summary.metrics.end() ? kEmpty : it->second;
}

GapStack StackOf(const GridResult& g, std::string label) {
  return GapStack{std::move(label), Metric(g, "usable_knowledge").mean,
                  Metric(g, "gap2").mean, Metric(g, "gap1").mean};
}

void WriteGridReport(GridResult& grid, const fs::path& dir) {
  const auto start = Clock::now();
  ResetDir(dir);
  grid.report_dir = dir;
  json summary = grid.summary.ToJson();
  summary["variant"] = grid.variant;
  summary["failures"] = grid.failures;
  WriteJson(dir / "summary.json", summary);

  std::vector<std::vector<std::string>> rows;
  for (const RunRecord& r : grid.records) rows.push_back(RecordRow(r));
  WriteFile(dir / "grid.csv",
            CsvTable({"extraction_seed", "split_seed", "finetune_seed",
                      "extraction_fraction", "downstream_accuracy",
                      "usable_knowledge", "gap1", "gap2", "random_baseline"},
                     rows));
  rows.clear();
  for (const auto& [r, st] : grid.relation_accuracy) {
    rows.push_back({r, std::to_string(st.n), FormatDouble(st.mean, 6),
                    FormatDouble(st.std, 6)});
  }
  WriteFile(dir / "per_relation.csv",
            CsvTable({"relation", "runs", "accuracy_mean", "accuracy_std"},
                     rows));

  std::vector<Bar> bars;
  for (const auto& [name, label] :
       std::vector<std::pair<const char*, const char*>>{
           {"extraction_fraction", "extracted"},
           {"downstream_accuracy", "downstream"},
           {"usable_knowledge", "usable"}}) {
    const MetricStats& st = Metric(grid, name);
    bars.push_back({label, st.mean, st.std});
  }
  WriteFile(dir / "metrics.svg",
            BarChartSvg(fmt::format("{} ({} of {} runs)", grid.backend_id,
                                    grid.records.size(), grid.expected_runs),
                        "mean over runs", bars));
  WriteFile(dir / "gaps.svg",
            StackedGapSvg(grid.backend_id, {StackOf(grid, grid.backend_id)}));

  std::string text = fmt::format("backend {}  variant {}\nruns {}/{}{}\n",
                                 grid.backend_id, grid.variant,
                                 grid.records.size(), grid.expected_runs,
                                 grid.complete() ? "" : "  (partial)");
  for (const auto& [name, st] : grid.summary.metrics) {
    text += fmt::format("{:<22} mean {:.4f}  std {:.4f}  min {:.4f}  max {:.4f}\n",
                        name, st.mean, st.std, st.min, st.max);
  }
  for (const std::string& f : grid.failures) text += "failed " + f + "\n";
  WriteFile(dir / "summary.txt", text);

  StageManifest m;
  m.stage = "report";
  json runs = json::array();
  for (const RunRecord& r : grid.records) {
    runs.push_back(json{{"e", r.extraction_seed},
                        {"s", r.split_seed},
                        {"f", r.finetune_seed},
                        {"report", r.report.ToJson()}});
  }
  m.key = KeyOf(runs);
  m.inputs = json{{"runs", m.key}};
  m.config = json{{"backend", grid.backend_id}, {"variant", grid.variant}};
  m.wall_clock_seconds = SecondsSince(start);
  WriteStageManifest(dir, std::move(m));
}

// Sweep table: one row per variant of one backend.
void WriteSweepReport(const std::string& title, const std::string& axis,
                      const std::vector<std::pair<std::string, const GridResult*>>& rows,
                      const fs::path& dir, bool stacked) {
  const auto start = Clock::now();
  ResetDir(dir);
  std::vector<std::vector<std::string>> table;
  std::vector<Bar> bars;
  std::vector<GapStack> stacks;
  for (const auto& [label, g] : rows) {
    const MetricStats& u = Metric(*g, "downstream_accuracy");
    const MetricStats& a = Metric(*g, "extraction_fraction");
    const MetricStats& k = Metric(*g, "usable_knowledge");
    table.push_back({label, g->backend_id, std::to_string(g->records.size()),
                     FormatDouble(a.mean, 6), FormatDouble(u.mean, 6),
                     FormatDouble(u.std, 6), FormatDouble(k.mean, 6),
                     FormatDouble(Metric(*g, "gap1").mean, 6),
                     FormatDouble(Metric(*g, "gap2").mean, 6)});
    bars.push_back({label, u.mean, u.std});
    stacks.push_back(StackOf(*g, label));
  }
  WriteFile(dir / "table.csv",
            CsvTable({axis, "backend", "runs", "extraction_fraction",
                      "downstream_accuracy", "downstream_accuracy_std",
                      "usable_knowledge", "gap1", "gap2"},
                     table));
  WriteFile(dir / "accuracy.svg",
            BarChartSvg(title, "downstream accuracy", bars));
  if (stacked) WriteFile(dir / "gaps.svg", StackedGapSvg(title, stacks));
  StageManifest m;
  m.stage = "sweep-report";
  m.key = KeyOf(json(table));
  m.config = json{{"title", title}, {"axis", axis}};
  m.wall_clock_seconds = SecondsSince(start);
  WriteStageManifest(dir, std::move(m));
}

std::string VariantLabel(double fraction) { return fmt::format("{:g}", fraction); }

void FinishManifest(RunManifest& out, const ExperimentConfig& cfg) {
  out.report_dir = cfg.output_root / "reports" / out.name / "summary";
  fs::create_directories(out.report_dir);
  WriteJson(out.report_dir / "experiment.json", out.ToJson());
  json cfg_json = cfg.ToJson();
  cfg_json.erase("output_root");
  WriteJson(out.report_dir / "config.json", cfg_json);
  StageManifest m;
  m.stage = "experiment";
  m.key = KeyOf(out.ToJson());
  m.config = cfg_json;
  WriteStageManifest(out.report_dir, std::move(m));
}

fs::path GridReportDir(const ExperimentConfig& cfg, const std::string& name,
                       const GridResult& g) {
  return cfg.output_root / "reports" / name / "grids" /
         fmt::format("{}-{}", g.backend_id, g.variant);
}

}  // namespace

json StageManifest::ToJson() const {
  return json{{"stage", stage},
              {"key", key},
              {"inputs", inputs},
              {"config", config},
              {"seeds", seeds},
              {"code_version", code_version},
              {"wall_clock_seconds", wall_clock_seconds},
              {"outputs", outputs}};
}

StageManifest StageManifest::FromJson(const json& j) {
  StageManifest m;
  m.stage = j.at("stage").get<std::string>();
  m.key = j.at("key").get<std::string>();
  m.inputs = j.value("inputs", json::object());
  m.config = j.value("config", json::object());
  m.seeds = j.value("seeds", json::object());
  m.code_version = j.at("code_version").get<std::string>();
  m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  return m;
}

std::map<std::string, std::string> HashOutputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel =
        fs::relative(entry.path(), dir).generic_string();
    if (rel == kManifestFile) continue;
    out[rel] = Sha256File(entry.path());
  }
  return out;
}

void WriteStageManifest(const fs::path& dir, StageManifest m) {
  m.outputs = HashOutputs(dir);
  WriteJson(dir / kManifestFile, m.ToJson());
}

bool StageIsCurrent(const fs::path& dir, const std::string& key) {
  const fs::path path = dir / kManifestFile;
  if (!fs::exists(path)) return false;
  StageManifest m;
  try {
    m = StageManifest::FromJson(ReadJson(path));
  } catch (const std::exception& e) {
    spdlog::warn("{}: unreadable manifest ({}); recomputing", dir.string(),
                 e.what());
    return false;
  }
  if (m.key != key) {
    spdlog::info("{}: inputs changed; recomputing", dir.string());
    return false;
  }
  const auto actual = HashOutputs(dir);
  if (actual != m.outputs) {
    for (const auto& [rel, hash] : m.outputs) {
      auto it = actual.find(rel);
      if (it == actual.end()) {
        spdlog::warn("{}: {} is missing; recomputing", dir.string(), rel);
      } else if (it->second != hash) {
        spdlog::warn("{}: {} was modified; recomputing", dir.string(), rel);
      }
    }
    for (const auto& [rel, hash] : actual) {
      if (!m.outputs.count(rel)) {
        spdlog::warn("{}: unexpected file {}; recomputing", dir.string(), rel);
      }
    }
    return false;
  }
  return true;
}

fs::path BackendDir(const fs::path& root, const std::string& id) {
  return root / "backends" / id / "model";
}

KnowledgeSnapshot RunExtraction(const ModelBackend& backend,
                                const FactSet& prompt_facts,
                                const FactSet& diagnostic,
                                const ExtractionConfig& cfg,
                                std::uint64_t seed, const fs::path& dir) {
  const Tokenizer& tok = backend.tokenizer();
  TailFilterResult diag = FilterSingleTokenTails(diagnostic, tok);
  if (diag.warning) spdlog::warn("diagnostic: {}", *diag.warning);
  TailFilterResult train = FilterSingleTokenTails(prompt_facts, tok);
  if (train.warning) spdlog::warn("prompt facts: {}", *train.warning);
  const Holdout holdout = StratifiedHoldout(
      train.facts, cfg.validation_fraction,
      SeedHasher().Add("prompt-holdout").Add(seed).Finish(), false);
  SoftPromptSet prompts =
      TrainSoftPrompts(backend, holdout.kept, holdout.held, cfg, seed);
  KnowledgeSnapshot snap =
      ExtractKnowledge(backend, prompts, diag.facts, seed);
  snap.dropped_facts = diag.dropped;
  snap.warning = diag.warning.value_or("");
  fs::create_directories(dir);
  WriteJson(dir / "prompts.json", prompts.ToJson());
  SaveSnapshot(snap, dir);
  spdlog::info("{} e{}: extracted {}/{} facts ({:.3f})", backend.id(), seed,
               snap.facts.size(), snap.diagnostic_size,
               snap.extraction_fraction);
  return snap;
}

json TaskOptions::ToJson() const {
  return json{{"split_kind", SplitKindName(split_kind)},
              {"split_ratio", split_ratio},
              {"generation", gen.ToJson()},
              {"snapshot_fraction", snapshot_fraction}};
}

TaskBundle RunTaskBuild(const KnowledgeSnapshot& snapshot,
                        const TemplatePack& pack, const TaskOptions& options,
                        std::uint64_t split_seed, const fs::path& dir) {
  const KnowledgeSnapshot sub =
      SubsampleSnapshot(snapshot, options.snapshot_fraction, split_seed);
  if (sub.facts.size() < 2) {
    throw Error(fmt::format(
        "snapshot of {} facts is too small to split into train and test",
        sub.facts.size()));
  }
  const TaskSplit split =
      MakeSplit(sub.facts, options.split_kind, options.split_ratio, split_seed);
  TaskBundle task = BuildTask(sub.facts, pack, split, options.gen);
  SaveTask(task, dir);
  pack.Save(dir / "templates.jsonl");
  WriteJson(dir / "snapshot.json", sub.ManifestJson());
  return task;
}

FinetunedModel RunTraining(std::unique_ptr<ModelBackend> backend,
                           const TaskBundle& task, const TemplatePack& pack,
                           const FinetuneConfig& cfg, std::uint64_t seed,
                           const fs::path& run_dir) {
  const fs::path dir = run_dir / "train";
  fs::create_directories(dir);
  const std::string backend_id = backend->id();
  WriteJson(dir / "config.json",
            json{{"backend_id", backend_id},
                 {"architecture_kind", ArchitectureName(backend->architecture())},
                 {"parameter_count", backend->ParameterCount()},
                 {"finetune", cfg.ToJson()},
                 {"seed", seed}});
  WriteJson(dir / "rng.json",
            json{{"finetune_seed", seed},
                 {"head_seed", ScoringHeadSeed(seed)},
                 {"validation_seed",
                  SeedHasher().Add("validation").Add(seed).Finish()},
                 {"order_seed",
                  SeedHasher().Add("finetune-order").Add(seed).Finish()},
                 {"task_base_seed", task.base_seed},
                 {"generator", "mt19937_64"}});
  ScoringHead head(backend->embedding_dim(), ScoringHeadSeed(seed));
  FinetunedModel model =
      Finetune(std::move(backend), std::move(head),
               TrainingData{&task, &pack}, cfg, seed);
  std::string lines;
  for (const EpochMetrics& m : model.trace) {
    lines += TraceLine(m).dump();
    lines += '\n';
  }
  WriteFile(dir / "metrics_epochs.jsonl", lines);
  const fs::path ckpt = dir / "checkpoint";
  fs::create_directories(ckpt);
  WriteJson(ckpt / "head.json", model.head.ToJson());
  WriteJson(ckpt / "best.json",
            json{{"best_epoch", model.best_epoch},
                 {"best_validation_accuracy", model.best_validation_accuracy},
                 {"validation_instances", model.validation_instances}});
  if (model.backend->differentiable()) {
    model.backend->Save(ckpt / "model");
  }
  return model;
}

FinetunedModel LoadTrainedModel(const fs::path& run_dir,
                                const fs::path& backend_dir) {
  const fs::path ckpt = run_dir / "train" / "checkpoint";
  const json best = ReadJson(ckpt / "best.json");
  std::unique_ptr<ModelBackend> backend =
      fs::exists(ckpt / "model") ? LoadBackend(ckpt / "model")
                                 : LoadBackend(backend_dir);
  FinetunedModel model{std::move(backend),
                       ScoringHead::FromJson(ReadJson(ckpt / "head.json")),
                       best.at("best_epoch").get<int>(),
                       best.at("best_validation_accuracy").get<double>(),
                       {},
                       best.at("validation_instances").get<std::size_t>()};
  return model;
}

RunRecord RunEvaluation(FinetunedModel& model, const TaskBundle& task,
                        double extraction_fraction, const RunLabels& labels,
                        const fs::path& run_dir) {
  const RetrievalResult result =
      EvaluateRetrieval(*model.backend, model.head, task.eval);
  RunRecord rec;
  rec.backend_id = labels.backend_id;
  rec.extraction_seed = labels.extraction_seed;
  rec.split_seed = labels.split_seed;
  rec.finetune_seed = labels.finetune_seed;
  rec.report = ComputeGaps(extraction_fraction, result.accuracy);
  rec.random_baseline = result.random_baseline;

  const fs::path dir = run_dir / "eval";
  fs::create_directories(dir);
  WriteJson(dir / "metrics.json",
            json{{"backend_id", rec.backend_id},
                 {"seeds",
                  {{"extraction", rec.extraction_seed},
                   {"split", rec.split_seed},
                   {"finetune", rec.finetune_seed}}},
                 {"gaps", rec.report.ToJson()},
                 {"retrieval", result.ToJson(false)},
                 {"best_epoch", model.best_epoch},
                 {"best_validation_accuracy", model.best_validation_accuracy}});
  std::string ranks;
  for (const InstanceResult& r : result.instances) {
    ranks += json{{"fact_uid", r.fact_uid},
                  {"relation", r.relation},
                  {"rank", r.rank},
                  {"candidates", r.candidates}}
                 .dump();
    ranks += '\n';
  }
  WriteFile(dir / "ranks.jsonl", ranks);
  WriteFile(dir / "summary.txt",
            fmt::format("backend {}  seeds e{} s{} f{}\n"
                        "test instances      {}\n"
                        "downstream accuracy {:.4f}  (random {:.4f})\n"
                        "extraction fraction {:.4f}\n"
                        "usable knowledge    {:.4f}\n"
                        "gap 1               {:.4f}\n"
                        "gap 2               {:.4f}\n"
                        "best epoch          {}\n",
                        rec.backend_id, rec.extraction_seed, rec.split_seed,
                        rec.finetune_seed, result.instances.size(),
                        result.accuracy, result.random_baseline,
                        rec.report.extraction_fraction,
                        rec.report.usable_knowledge, rec.report.gap1,
                        rec.report.gap2, model.best_epoch));
  return rec;
}

RunRecord ReadRunRecord(const fs::path& run_dir) {
  const json m = ReadJson(run_dir / "eval" / "metrics.json");
  RunRecord rec;
  rec.backend_id = m.at("backend_id").get<std::string>();
  rec.extraction_seed = m.at("seeds").at("extraction").get<std::uint64_t>();
  rec.split_seed = m.at("seeds").at("split").get<std::uint64_t>();
  rec.finetune_seed = m.at("seeds").at("finetune").get<std::uint64_t>();
  rec.report = GapReport::FromJson(m.at("gaps"));
  rec.random_baseline = m.at("retrieval").at("random_baseline").get<double>();
  return rec;
}

json GridResult::ToJson() const {
  return json{{"backend_id", backend_id},
              {"variant", variant},
              {"runs", records.size()},
              {"expected_runs", expected_runs},
              {"complete", complete()},
              {"failures", failures},
              {"summary", summary.ToJson()}};
}

bool RunManifest::complete() const {
  return std::all_of(grids.begin(), grids.end(),
                     [](const GridResult& g) { return g.complete(); });
}

json RunManifest::ToJson() const {
  json g = json::array();
  for (const GridResult& r : grids) g.push_back(r.ToJson());
  return json{{"name", name},
              {"complete", complete()},
              {"code_version", kCodeVersion},
              {"grids", g}};
}

RunManifest RunExperiment(const ExperimentConfig& cfg) {
  const SharedData data = LoadShared(cfg);
  RunManifest out;
  out.name = "base";
  for (const BackendSpec& spec : cfg.backends) {
    const Inputs in = PrepareInputs(cfg, data, spec, true);
    GridResult g = RunGrid(in, "base", OptionsFrom(cfg), true);
    WriteGridReport(g, GridReportDir(cfg, out.name, g));
    out.grids.push_back(std::move(g));
  }
  if (out.grids.size() > 1) {
    std::vector<std::pair<std::string, const GridResult*>> rows;
    for (const GridResult& g : out.grids) rows.emplace_back(g.backend_id, &g);
    WriteSweepReport("backends", "backend", rows,
                     cfg.output_root / "reports" / out.name / "backends", true);
  }
  FinishManifest(out, cfg);
  return out;
}

RunManifest SweepFraction(const ExperimentConfig& cfg,
                          const std::vector<double>& fractions) {
  if (fractions.empty()) throw Error("sweep-fraction: no fractions given");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw Error(fmt::format("sweep-fraction: {} is outside (0, 1]", f));
    }
  }
  const SharedData data = LoadShared(cfg);
  RunManifest out;
  out.name = "sweep-fraction";
  for (const BackendSpec& spec : cfg.backends) {
    const Inputs in = PrepareInputs(cfg, data, spec, true);
    const std::size_t first = out.grids.size();
    for (double f : fractions) {
      TaskOptions options = OptionsFrom(cfg);
      options.snapshot_fraction = f;
      GridResult g =
          RunGrid(in, "fraction-" + VariantLabel(f), options, true);
      WriteGridReport(g, GridReportDir(cfg, out.name, g));
      out.grids.push_back(std::move(g));
    }
    std::vector<std::pair<std::string, const GridResult*>> rows;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
      rows.emplace_back(VariantLabel(fractions[i]), &out.grids[first + i]);
    }
    WriteSweepReport(spec.id + ": accuracy by snapshot fraction", "fraction",
                     rows, cfg.output_root / "reports" / out.name / spec.id,
                     false);
  }
  FinishManifest(out, cfg);
  return out;
}

RunManifest SweepNegatives(const ExperimentConfig& cfg,
                           const std::vector<int>& counts) {
  if (counts.empty()) throw Error("sweep-negatives: no counts given");
  for (int c : counts) {
    if (c < 1) throw Error("sweep-negatives: counts must be at least 1");
  }
  const SharedData data = LoadShared(cfg);
  RunManifest out;
  out.name = "sweep-negatives";
  for (const BackendSpec& spec : cfg.backends) {
    const Inputs in = PrepareInputs(cfg, data, spec, true);
    const std::size_t first = out.grids.size();
    for (int c : counts) {
      TaskOptions options = OptionsFrom(cfg);
      options.gen.negatives_per_type = c;
      GridResult g =
          RunGrid(in, fmt::format("negatives-{}", c), options, true);
      WriteGridReport(g, GridReportDir(cfg, out.name, g));
      out.grids.push_back(std::move(g));
    }
    std::vector<std::pair<std::string, const GridResult*>> rows;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      rows.emplace_back(std::to_string(counts[i]), &out.grids[first + i]);
    }
    WriteSweepReport(spec.id + ": accuracy by negatives per type",
                     "negatives_per_type", rows,
                     cfg.output_root / "reports" / out.name / spec.id, false);
  }
  FinishManifest(out, cfg);
  return out;
}

RunManifest SweepBackends(const ExperimentConfig& cfg,
                          const std::vector<std::string>& ids) {
  if (ids.empty()) throw Error("sweep-backends: no backends given");
  std::set<std::string> seen;
  std::vector<BackendSpec> specs;
  for (const std::string& id : ids) {
    if (!seen.insert(id).second) {
      throw Error("sweep-backends: duplicate backend id '" + id + "'");
    }
    specs.push_back(ResolveBackend(id, cfg.backends));
  }
  ExperimentConfig sweep = cfg;
  sweep.backends = specs;
  const SharedData data = LoadShared(sweep);
  RunManifest out;
  out.name = "sweep-backends";
  for (const BackendSpec& spec : specs) {
    const Inputs in = PrepareInputs(sweep, data, spec, true);
    GridResult g = RunGrid(in, "base", OptionsFrom(sweep), true);
    WriteGridReport(g, GridReportDir(sweep, out.name, g));
    out.grids.push_back(std::move(g));
  }
  std::vector<std::pair<std::string, const GridResult*>> rows;
  for (const GridResult& g : out.grids) rows.emplace_back(g.backend_id, &g);
  WriteSweepReport("gaps by backend", "backend", rows,
                   sweep.output_root / "reports" / out.name / "backends", true);
  FinishManifest(out, sweep);
  return out;
}

RunManifest Report(const ExperimentConfig& cfg) {
  const SharedData data = LoadShared(cfg);
  RunManifest out;
  out.name = "base";
  for (const BackendSpec& spec : cfg.backends) {
    const Inputs in = PrepareInputs(cfg, data, spec, false);
    GridResult g = RunGrid(in, "base", OptionsFrom(cfg), false);
    WriteGridReport(g, GridReportDir(cfg, out.name, g));
    out.grids.push_back(std::move(g));
  }
  FinishManifest(out, cfg);
  return out;
}

}  // namespace xteval
