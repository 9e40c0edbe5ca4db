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

// Retrieval task construction from a knowledge snapshot: the document
// generator, training and evaluation instances, and the fact splits.

#ifndef XTEVAL_TASKFORGE_H_
#define XTEVAL_TASKFORGE_H_

#include <filesystem>
#include <string>
#include <vector>

#include "xteval/document.h"
#include "xteval/extractor.h"
#include "xteval/kb.h"
#include "xteval/templates.h"

namespace xteval {

struct TaskGenConfig {
  int negatives_per_type = 4;
  int eval_samples_per_type = 50;
  int unrelated_true_count = 50;
  // Active distractor types at evaluation. kHR_ is enumerated, not sampled.
  std::vector<DocType> inference_types = {kNonGoldTypes.begin(),
                                          kNonGoldTypes.end()};

  json ToJson() const;
  static TaskGenConfig FromJson(const json& j);
};

struct RetrievalInstance {
  std::string fact_uid;
  std::string relation;
  std::string query;
  Document gold;
  std::vector<Document> negatives;

  friend bool operator==(const RetrievalInstance&,
                         const RetrievalInstance&) = default;
};

json InstanceToJson(const RetrievalInstance& instance);
RetrievalInstance InstanceFromJson(const json& j);

// Renders documents of any type for facts of a snapshot.
//
// Randomized slots are drawn uniformly from the pool of the effective
// relation (the sampled relation when the relation slot is randomized)
// minus the gold entity, falling back to the cross-relation pool when that
// leaves nothing. Draws that reproduce a triple of `known` are redrawn, so
// a distractor is never itself a known fact. The template is drawn
// uniformly among the effective relation's templates.
class DocumentGenerator {
 public:
  // `unrelated` supplies the facts rendered as unrelated_true documents.
  // All references must outlive the generator.
  DocumentGenerator(const TemplatePack& pack, EntityPools pools,
                    const FactSet& known, const FactSet* unrelated = nullptr);

  Document Generate(const Fact& fact, DocType type, Rng& rng) const;
  // Every (h, r, t') with t' in the relation's tail pool, t' != t and
  // (h, r, t') not a known fact, each with a sampled template.
  std::vector<Document> EnumerateTails(const Fact& fact, Rng& rng) const;
  // A template of the fact's relation with the tail slot removed.
  std::string Query(const Fact& fact, Rng& rng) const;

  const EntityPools& pools() const { return pools_; }

 private:
  const Template& PickTemplate(std::string_view relation, Rng& rng) const;
  Document Render(const Fact& fact, DocType type, const std::string& head,
                  const std::string& relation, const std::string& tail,
                  Substitutions subs, Rng& rng) const;
  Document UnrelatedTrue(const Fact& fact, Rng& rng) const;

  const TemplatePack& pack_;
  EntityPools pools_;
  const FactSet& known_;
  const FactSet* unrelated_;
};

// Query and gold depend only on (base_seed, fact); negatives additionally
// on the epoch.
RetrievalInstance BuildTrainInstance(const Fact& fact,
                                     const TaskGenConfig& cfg,
                                     const DocumentGenerator& gen,
                                     std::uint64_t base_seed, int epoch);
RetrievalInstance BuildEvalInstance(const Fact& fact, const TaskGenConfig& cfg,
                                    const DocumentGenerator& gen,
                                    std::uint64_t base_seed);

enum class SplitKind { kIid, kOodRelation };
std::string_view SplitKindName(SplitKind kind);
SplitKind ParseSplitKind(std::string_view name);

struct TaskSplit {
  std::vector<std::string> train;  // fact uids, snapshot order
  std::vector<std::string> test;
  SplitKind kind = SplitKind::kIid;
  std::uint64_t seed = 0;
  double ratio = 0.6;
  // OOD only.
  std::vector<std::string> train_relations;
  std::vector<std::string> test_relations;

  json ToJson() const;
  static TaskSplit FromJson(const json& j);
};

// |train| = round(ratio * n), clamped to [1, n - 1].
TaskSplit SplitIid(const FactSet& snapshot, double ratio, std::uint64_t seed);
// round(ratio * R) relations (clamped to [1, R - 1]) and all their facts go
// to train.
TaskSplit SplitOodByRelation(const FactSet& snapshot, double ratio,
                             std::uint64_t seed);
TaskSplit MakeSplit(const FactSet& snapshot, SplitKind kind, double ratio,
                    std::uint64_t seed);

// ceil(fraction * n) facts; the extraction fraction stays relative to the
// diagnostic size.
KnowledgeSnapshot SubsampleSnapshot(const KnowledgeSnapshot& snapshot,
                                    double fraction, std::uint64_t seed);

struct TaskBundle {
  TaskSplit split;
  TaskGenConfig cfg;
  std::uint64_t base_seed = 0;
  FactSet snapshot;
  FactSet train_facts;
  FactSet test_facts;
  // Epoch-0 training instances.
  std::vector<RetrievalInstance> train;
  std::vector<RetrievalInstance> eval;
};

std::uint64_t TaskBaseSeed(std::uint64_t split_seed);

TaskBundle BuildTask(const FactSet& snapshot, const TemplatePack& pack,
                     const TaskSplit& split, const TaskGenConfig& cfg);

// Training documents only use entities of the training facts, so an OOD
// split never shows test relations during finetuning.
DocumentGenerator TrainingGenerator(const TaskBundle& task,
                                    const TemplatePack& pack);

// split.json, task.json, facts.jsonl, train.jsonl, eval.jsonl.
void SaveTask(const TaskBundle& task, const std::filesystem::path& dir);
TaskBundle LoadTask(const std::filesystem::path& dir);

}  // namespace xteval

#endif  // XTEVAL_TASKFORGE_H_
