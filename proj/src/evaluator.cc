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

#include <fmt/format.h>

namespace xteval {
namespace {

constexpr const char* kMetricNames[] = {"extraction_fraction",
                                        "downstream_accuracy",
                                        "usable_knowledge", "gap1", "gap2"};

std::map<std::string, double> MetricMap(const GapReport& r) {
  return {{"extraction_fraction", r.extraction_fraction},
          {"downstream_accuracy", r.downstream_accuracy},
          {"usable_knowledge", r.usable_knowledge},
          {"gap1", r.gap1},
          {"gap2", r.gap2}};
}

std::map<std::string, double> MeanOf(const std::vector<const RunRecord*>& rs) {
  std::map<std::string, double> sums;
  for (const RunRecord* r : rs) {
    for (const auto& [k, v] : MetricMap(r->report)) sums[k] += v;
  }
  for (auto& [k, v] : sums) v /= static_cast<double>(rs.size());
  return sums;
}

}  // namespace

std::size_t GoldRank(std::span<const double> scores, std::size_t gold_index) {
  if (gold_index >= scores.size()) throw Error("gold index out of range");
  const double gold = scores[gold_index];
  if (!std::isfinite(gold)) throw Error("non-finite gold score");
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == gold_index) continue;
    if (!std::isfinite(scores[i])) throw Error("non-finite candidate score");
    if (scores[i] >= gold) ++rank;
  }
  return rank;
}

json RetrievalResult::ToJson(bool with_instances) const {
  json rel = json::object();
  for (const auto& [r, a] : per_relation) {
    rel[r] = json{{"instances", a.instances},
                  {"correct", a.correct},
                  {"accuracy", a.accuracy}};
  }
  json j{{"accuracy", accuracy},
         {"instances", instances.size()},
         {"random_baseline", random_baseline},
         {"per_relation", rel}};
  if (with_instances) {
    json rows = json::array();
    for (const InstanceResult& r : instances) {
      rows.push_back(json{{"fact_uid", r.fact_uid},
                          {"relation", r.relation},
                          {"rank", r.rank},
                          {"candidates", r.candidates}});
    }
    j["per_instance"] = std::move(rows);
  }
  return j;
}

RetrievalResult EvaluateRetrieval(
    ModelBackend& backend, ScoringHead& head,
    std::span<const RetrievalInstance> instances) {
  RetrievalResult result;
  std::size_t correct = 0;
  double baseline = 0.0;
  for (const RetrievalInstance& inst : instances) {
    if (inst.gold.doc_type != DocType::kGold) {
      throw Error("instance " + inst.fact_uid + " has no gold document");
    }
    std::vector<const Document*> docs;
    docs.reserve(inst.negatives.size() + 1);
    docs.push_back(&inst.gold);
    for (const Document& d : inst.negatives) {
      if (d.doc_type == DocType::kGold) {
        throw Error("instance " + inst.fact_uid + " has two gold documents");
      }
      docs.push_back(&d);
    }
    const std::vector<double> scores =
        ScoreCandidates(backend, head, inst.query, docs);
    InstanceResult r{inst.fact_uid, inst.relation, GoldRank(scores, 0),
                     docs.size()};
    RelationAccuracy& rel = result.per_relation[inst.relation];
    ++rel.instances;
    if (r.rank == 1) {
      ++correct;
      ++rel.correct;
    }
    baseline += 1.0 / static_cast<double>(r.candidates);
    result.instances.push_back(std::move(r));
  }
  for (auto& [name, rel] : result.per_relation) {
    rel.accuracy = static_cast<double>(rel.correct) /
                   static_cast<double>(rel.instances);
  }
  if (!instances.empty()) {
    const auto n = static_cast<double>(instances.size());
    result.accuracy = static_cast<double>(correct) / n;
    result.random_baseline = baseline / n;
  }
  return result;
}

json GapReport::ToJson() const {
  return json{{"extraction_fraction", extraction_fraction},
              {"downstream_accuracy", downstream_accuracy},
              {"usable_knowledge", usable_knowledge},
              {"gap1", gap1},
              {"gap2", gap2}};
}

GapReport GapReport::FromJson(const json& j) {
  return ComputeGaps(j.at("extraction_fraction").get<double>(),
                     j.at("downstream_accuracy").get<double>());
}

GapReport ComputeGaps(double a, double u) {
  if (!(a >= 0.0 && a <= 1.0) || !(u >= 0.0 && u <= 1.0)) {
    throw Error(fmt::format("gap inputs must lie in [0, 1] (a={}, u={})", a, u));
  }
  GapReport r;
  r.extraction_fraction = a;
  r.downstream_accuracy = u;
  r.usable_knowledge = a * u;
  r.gap1 = 1.0 - a;
  r.gap2 = a * (1.0 - u);
  return r;
}

json MetricStats::ToJson() const {
  return json{{"mean", mean}, {"std", std}, {"min", min}, {"max", max},
              {"n", n}};
}

MetricStats Describe(std::span<const double> values) {
  MetricStats s;
  s.n = values.size();
  if (values.empty()) return s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  // Constant columns report their value exactly, without summation error.
  if (s.min == s.max) {
    s.mean = s.min;
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = s.n > 1 ? std::sqrt(sq / static_cast<double>(s.n - 1)) : 0.0;
  return s;
}

json RunSummary::ToJson() const {
  json m = json::object();
  for (const auto& [k, v] : metrics) m[k] = v.ToJson();
  return json{{"backend_id", backend_id},
              {"runs", runs},
              {"expected_runs", expected_runs},
              {"complete", complete},
              {"metrics", m},
              {"by_extraction_seed", by_extraction_seed},
              {"by_task", by_task}};
}

RunSummary AggregateRuns(std::span<const RunRecord> records,
                         std::size_t expected_runs) {
  if (records.empty()) throw Error("no runs to aggregate");
  RunSummary s;
  s.backend_id = records.front().backend_id;
  s.runs = records.size();
  s.expected_runs = expected_runs;
  s.complete = expected_runs == 0 || records.size() == expected_runs;
  std::map<std::string, std::vector<double>> columns;
  std::map<std::string, std::vector<const RunRecord*>> by_e, by_t;
  for (const RunRecord& r : records) {
    if (r.backend_id != s.backend_id) {
      throw Error(fmt::format("cannot aggregate runs of backends '{}' and '{}'",
                              s.backend_id, r.backend_id));
    }
    for (const auto& [k, v] : MetricMap(r.report)) columns[k].push_back(v);
    columns["random_baseline"].push_back(r.random_baseline);
    by_e[fmt::format("e{}", r.extraction_seed)].push_back(&r);
    by_t[fmt::format("e{}-s{}", r.extraction_seed, r.split_seed)].push_back(&r);
  }
  for (const char* name : kMetricNames) {
    s.metrics[name] = Describe(columns[name]);
  }
  s.metrics["random_baseline"] = Describe(columns["random_baseline"]);
  for (const auto& [k, rs] : by_e) s.by_extraction_seed[k] = MeanOf(rs);
  for (const auto& [k, rs] : by_t) s.by_task[k] = MeanOf(rs);
  return s;
}

}  // namespace xteval
