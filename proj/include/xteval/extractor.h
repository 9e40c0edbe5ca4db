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

// Knowledge extraction: per-relation soft prompts around the head entity,
// and the snapshot of facts whose tail the frozen backend ranks first.

#ifndef XTEVAL_EXTRACTOR_H_
#define XTEVAL_EXTRACTOR_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xteval/backend.h"
#include "xteval/kb.h"

namespace xteval {

struct ExtractionConfig {
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  int batch_size = 64;
  double warmup_fraction = 0.06;
  int epochs = 20;
  // Held out of the prompt-training facts, stratified by relation.
  double validation_fraction = 0.1;

  json ToJson() const;
  static ExtractionConfig FromJson(const json& j);
};

struct SoftPromptSet {
  // relation -> 2 * kPromptLength x embedding_dim (prefix rows, then suffix).
  std::map<std::string, nn::Parameter> prompts;
  std::uint64_t seed = 0;
  // Validation top-1 of the selected checkpoints, pooled over relations.
  double selection_metric = 0.0;
  std::map<std::string, double> relation_metric;
  std::map<std::string, int> best_epoch;

  nn::Parameter& For(std::string_view relation);
  bool Covers(std::string_view relation) const;

  json ToJson() const;
  static SoftPromptSet FromJson(const json& j);
};

AssembledPrompt AssemblePrompt(const ModelBackend& backend,
                               nn::Parameter& prompt, const Fact& fact);

// True when the backend ranks the gold tail token first.
bool PredictsTail(const ModelBackend& backend, nn::Parameter& prompt,
                  const Fact& fact);

// Per relation: initialize, train with AdamW on the tail cross-entropy and
// keep the epoch with the best validation top-1 (epoch 0 is the untrained
// prompt). Non-differentiable backends skip training.
SoftPromptSet TrainSoftPrompts(const ModelBackend& backend,
                               const FactSet& train, const FactSet& val,
                               const ExtractionConfig& cfg,
                               std::uint64_t seed);

struct KnowledgeSnapshot {
  FactSet facts;
  // |facts| / diagnostic_size.
  double extraction_fraction = 0.0;
  std::size_t diagnostic_size = 0;
  std::string backend_id;
  std::uint64_t seed = 0;
  // Diagnostic facts removed before extraction (multi-token tails).
  std::size_t dropped_facts = 0;
  std::string warning;

  json ManifestJson() const;
};

KnowledgeSnapshot ExtractKnowledge(const ModelBackend& backend,
                                   SoftPromptSet& prompts,
                                   const FactSet& diagnostic,
                                   std::uint64_t seed);

// snapshot.json + facts.jsonl.
void SaveSnapshot(const KnowledgeSnapshot& snapshot,
                  const std::filesystem::path& dir);
KnowledgeSnapshot LoadSnapshot(const std::filesystem::path& dir);

}  // namespace xteval

#endif  // XTEVAL_EXTRACTOR_H_
