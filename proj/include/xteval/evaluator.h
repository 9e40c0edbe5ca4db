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

// Retrieval evaluation, the knowledge-gap decomposition and seed-grid
// aggregation.

#ifndef XTEVAL_EVALUATOR_H_
#define XTEVAL_EVALUATOR_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "xteval/backend.h"
#include "xteval/taskforge.h"

namespace xteval {

// 1 + number of non-gold candidates scoring at least the gold score, so
// the gold document loses every exact tie and the rank does not depend on
// candidate order.
std::size_t GoldRank(std::span<const double> scores, std::size_t gold_index);

struct InstanceResult {
  std::string fact_uid;
  std::string relation;
  std::size_t rank = 0;
  std::size_t candidates = 0;
};

struct RelationAccuracy {
  std::size_t instances = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct RetrievalResult {
  std::vector<InstanceResult> instances;
  double accuracy = 0.0;
  // Mean of 1 / candidates: the expected accuracy of a random scorer.
  double random_baseline = 0.0;
  std::map<std::string, RelationAccuracy> per_relation;

  json ToJson(bool with_instances) const;
};

// Candidates of an instance are the gold document followed by its
// negatives.
RetrievalResult EvaluateRetrieval(ModelBackend& backend, ScoringHead& head,
                                  std::span<const RetrievalInstance> instances);

struct GapReport {
  double extraction_fraction = 0.0;   // a
  double downstream_accuracy = 0.0;   // u
  double usable_knowledge = 0.0;      // a * u
  double gap1 = 0.0;                  // 1 - a
  double gap2 = 0.0;                  // a * (1 - u)

  json ToJson() const;
  static GapReport FromJson(const json& j);
};

GapReport ComputeGaps(double a, double u);

struct RunRecord {
  std::string backend_id;
  std::uint64_t extraction_seed = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t finetune_seed = 0;
  GapReport report;
  double random_baseline = 0.0;
};

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;

  json ToJson() const;
};

MetricStats Describe(std::span<const double> values);

struct RunSummary {
  std::string backend_id;
  std::size_t runs = 0;
  std::size_t expected_runs = 0;
  bool complete = false;
  std::map<std::string, MetricStats> metrics;
  // Metric means per extraction seed and per (extraction, split) pair.
  std::map<std::string, std::map<std::string, double>> by_extraction_seed;
  std::map<std::string, std::map<std::string, double>> by_task;

  json ToJson() const;
};

// All records must share one backend id. `expected_runs` of 0 skips the
// completeness check.
RunSummary AggregateRuns(std::span<const RunRecord> records,
                         std::size_t expected_runs);

}  // namespace xteval

#endif  // XTEVAL_EVALUATOR_H_
