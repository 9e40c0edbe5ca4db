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

// Cross-encoder finetuning with the InfoNCE objective.

#ifndef XTEVAL_TRAINER_H_
#define XTEVAL_TRAINER_H_

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "xteval/backend.h"
#include "xteval/taskforge.h"

namespace xteval {

struct FinetuneConfig {
  double learning_rate = 1e-5;
  double weight_decay = 0.0;
  int batch_size = 32;
  double warmup_fraction = 0.06;
  int epochs = 20;
  // Share of training facts held out for checkpoint selection.
  double validation_fraction = 0.1;

  json ToJson() const;
  static FinetuneConfig FromJson(const json& j);
};

struct InfoNceResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d scores
};

// scores[0] is the gold document; the rest are its negatives.
// loss = -log(exp(s0) / sum_i exp(si)).
InfoNceResult InfoNce(std::span<const double> scores);
double InfoNceLoss(std::span<const double> scores);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct FinetunedModel {
  std::unique_ptr<ModelBackend> backend;
  ScoringHead head;
  // 0 when no epoch improved on the untrained model.
  int best_epoch = 0;
  double best_validation_accuracy = 0.0;
  std::vector<EpochMetrics> trace;
  std::size_t validation_instances = 0;
};

// Training inputs: the epoch-0 instances are regenerated from the facts
// with the per-epoch negative seed.
struct TrainingData {
  const TaskBundle* task = nullptr;
  const TemplatePack* pack = nullptr;
};

// Takes ownership of a fresh copy of the backend. The validation facts are
// a stratified holdout of the training facts drawn with `seed`; their
// instances are frozen at epoch 0. Non-differentiable backends are
// evaluated on validation but not trained.
FinetunedModel Finetune(std::unique_ptr<ModelBackend> backend,
                        ScoringHead head, const TrainingData& data,
                        const FinetuneConfig& cfg, std::uint64_t seed);

// Head seed used by a finetuning run.
std::uint64_t ScoringHeadSeed(std::uint64_t finetune_seed);

}  // namespace xteval

#endif  // XTEVAL_TRAINER_H_
