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

#include "xteval/taskforge.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace xteval {
namespace {

// Redraws of a randomized slot that lands on a known triple.
constexpr int kMaxRedraws = 32;

const std::vector<std::string>& PoolOrEmpty(
    const std::map<std::string, std::vector<std::string>>& pools,
    const std::string& relation) {
  static const std::vector<std::string> kEmpty;
  auto it = pools.find(relation);
  return it == pools.end() ? kEmpty : it->second;
}

bool HasOther(const std::vector<std::string>& pool, const std::string& gold) {
  return pool.size() > 1 ||
         (pool.size() == 1 && pool.front() != gold);
}

// Uniform over pool \ {gold}; the pool is deduplicated.
const std::string& DrawOther(const std::vector<std::string>& pool,
                             const std::string& gold, Rng& rng) {
  const bool has_gold = std::binary_search(pool.begin(), pool.end(), gold);
  const std::size_t n = pool.size() - (has_gold ? 1 : 0);
  std::size_t i = UniformIndex(rng, n);
  if (has_gold) {
    const auto gold_pos = static_cast<std::size_t>(
        std::lower_bound(pool.begin(), pool.end(), gold) - pool.begin());
    if (i >= gold_pos) ++i;
  }
  return pool[i];
}

const std::string& DrawSlot(const std::vector<std::string>& preferred,
                            const std::vector<std::string>& fallback,
                            const std::string& gold, std::string_view slot,
                            Rng& rng) {
  if (HasOther(preferred, gold)) return DrawOther(preferred, gold, rng);
  if (HasOther(fallback, gold)) return DrawOther(fallback, gold, rng);
  throw Error(fmt::format("degenerate pool: no {} other than '{}'", slot, gold));
}

template <typename T>
std::vector<T> SelectInOrder(const std::vector<T>& items,
                             const std::set<T>& chosen) {
  std::vector<T> out;
  for (const T& item : items) {
    if (chosen.contains(item)) out.push_back(item);
  }
  return out;
}

std::size_t ClampedCount(double ratio, std::size_t n) {
  const auto k = static_cast<std::size_t>(
      std::lround(ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

}  // namespace

json TaskGenConfig::ToJson() const {
  std::vector<std::string> types;
  for (DocType t : inference_types) types.emplace_back(DocTypeName(t));
  return json{{"negatives_per_type", negatives_per_type},
              {"eval_samples_per_type", eval_samples_per_type},
              {"unrelated_true_count", unrelated_true_count},
              {"inference_types", types}};
}

TaskGenConfig TaskGenConfig::FromJson(const json& j) {
  TaskGenConfig c;
  StrictObject obj(j, "task");
  c.negatives_per_type = obj.Get("negatives_per_type", c.negatives_per_type);
  c.eval_samples_per_type =
      obj.Get("eval_samples_per_type", c.eval_samples_per_type);
  c.unrelated_true_count =
      obj.Get("unrelated_true_count", c.unrelated_true_count);
  if (obj.Has("inference_types")) {
    c.inference_types.clear();
    for (const auto& name :
         obj.Required<std::vector<std::string>>("inference_types")) {
      const DocType t = ParseDocType(name);
      if (t == DocType::kGold) {
        throw Error("task: the gold type cannot be a distractor type");
      }
      if (std::find(c.inference_types.begin(), c.inference_types.end(), t) !=
          c.inference_types.end()) {
        throw Error("task: duplicate inference type " + name);
      }
      c.inference_types.push_back(t);
    }
  }
  obj.Finish();
  if (c.negatives_per_type < 1) {
    throw Error("task: negatives_per_type must be at least 1");
  }
  if (c.eval_samples_per_type < 0 || c.unrelated_true_count < 0) {
    throw Error("task: sample counts must be non-negative");
  }
  return c;
}

json InstanceToJson(const RetrievalInstance& instance) {
  json negatives = json::array();
  for (const Document& d : instance.negatives) {
    negatives.push_back(DocumentToJson(d));
  }
  return json{{"fact_uid", instance.fact_uid},
              {"relation", instance.relation},
              {"query", instance.query},
              {"gold", DocumentToJson(instance.gold)},
              {"negatives", std::move(negatives)}};
}

RetrievalInstance InstanceFromJson(const json& j) {
  RetrievalInstance r;
  r.fact_uid = j.at("fact_uid").get<std::string>();
  r.relation = j.at("relation").get<std::string>();
  r.query = j.at("query").get<std::string>();
  r.gold = DocumentFromJson(j.at("gold"));
  for (const json& d : j.at("negatives")) {
    r.negatives.push_back(DocumentFromJson(d));
  }
  if (r.gold.doc_type != DocType::kGold) {
    throw Error("instance " + r.fact_uid + ": gold document has type " +
                std::string(DocTypeName(r.gold.doc_type)));
  }
  return r;
}

DocumentGenerator::DocumentGenerator(const TemplatePack& pack,
                                     EntityPools pools, const FactSet& known,
                                     const FactSet* unrelated)
    : pack_(pack), pools_(std::move(pools)), known_(known),
      unrelated_(unrelated) {}

const Template& DocumentGenerator::PickTemplate(std::string_view relation,
                                                Rng& rng) const {
  const std::vector<Template>& options = pack_.ForRelation(relation);
  return options[UniformIndex(rng, options.size())];
}

std::string DocumentGenerator::Query(const Fact& fact, Rng& rng) const {
  const Template& t = PickTemplate(fact.relation, rng);
  return RenderQuery(t, fact.head, t.phrase);
}

Document DocumentGenerator::Render(const Fact& fact, DocType type,
                                   const std::string& head,
                                   const std::string& relation,
                                   const std::string& tail, Substitutions subs,
                                   Rng& rng) const {
  const Template& t = PickTemplate(relation, rng);
  Document d;
  d.text = RenderTemplate(t, head, t.phrase, tail);
  d.doc_type = type;
  d.fact_uid = fact.uid;
  d.template_variant = t.variant;
  d.substitutions = std::move(subs);
  return d;
}

Document DocumentGenerator::UnrelatedTrue(const Fact& fact, Rng& rng) const {
  if (unrelated_ == nullptr || unrelated_->empty()) {
    throw Error("unrelated_true documents need a source fact set");
  }
  auto eligible = [&fact](const Fact& other) {
    return other.uid != fact.uid &&
           !(other.head == fact.head && other.relation == fact.relation);
  };
  const auto& facts = unrelated_->facts();
  const Fact* pick = nullptr;
  for (int attempt = 0; attempt < kMaxRedraws && pick == nullptr; ++attempt) {
    const Fact& candidate = facts[UniformIndex(rng, facts.size())];
    if (eligible(candidate)) pick = &candidate;
  }
  if (pick == nullptr) {
    std::vector<const Fact*> pool;
    for (const Fact& f : facts) {
      if (eligible(f)) pool.push_back(&f);
    }
    if (pool.empty()) {
      throw Error("degenerate pool: no unrelated fact for " + fact.uid);
    }
    pick = pool[UniformIndex(rng, pool.size())];
  }
  Substitutions subs;
  subs.head = pick->head;
  subs.relation = pick->relation;
  subs.tail = pick->tail;
  subs.source_uid = pick->uid;
  return Render(fact, DocType::kUnrelatedTrue, pick->head, pick->relation,
                pick->tail, std::move(subs), rng);
}

Document DocumentGenerator::Generate(const Fact& fact, DocType type,
                                     Rng& rng) const {
  if (type == DocType::kUnrelatedTrue) return UnrelatedTrue(fact, rng);
  std::string head = fact.head, relation = fact.relation, tail = fact.tail;
  Substitutions subs;
  for (int attempt = 0;; ++attempt) {
    subs = Substitutions{};
    if (!RelationIsGold(type)) {
      relation = DrawSlot(pools_.all_relations, {}, fact.relation,
                          "relation", rng);
      subs.relation = relation;
    }
    if (!HeadIsGold(type)) {
      head = DrawSlot(PoolOrEmpty(pools_.heads_by_relation, relation),
                      pools_.all_heads, fact.head, "head", rng);
      subs.head = head;
    }
    if (!TailIsGold(type)) {
      tail = DrawSlot(PoolOrEmpty(pools_.tails_by_relation, relation),
                      pools_.all_tails, fact.tail, "tail", rng);
      subs.tail = tail;
    }
    if (type == DocType::kGold || attempt + 1 >= kMaxRedraws ||
        !known_.ContainsTriple(head, relation, tail)) {
      break;
    }
  }
  return Render(fact, type, head, relation, tail, std::move(subs), rng);
}

std::vector<Document> DocumentGenerator::EnumerateTails(const Fact& fact,
                                                        Rng& rng) const {
  std::vector<Document> docs;
  for (const std::string& t :
       PoolOrEmpty(pools_.tails_by_relation, fact.relation)) {
    if (t == fact.tail || known_.ContainsTriple(fact.head, fact.relation, t)) {
      continue;
    }
    Substitutions subs;
    subs.tail = t;
    docs.push_back(Render(fact, DocType::kHR_, fact.head, fact.relation, t,
                          std::move(subs), rng));
  }
  return docs;
}

namespace {

RetrievalInstance QueryAndGold(const Fact& fact, const DocumentGenerator& gen,
                               std::uint64_t base_seed) {
  Rng rng(SeedHasher().Add("instance").Add(base_seed).Add(fact.uid).Finish());
  RetrievalInstance inst;
  inst.fact_uid = fact.uid;
  inst.relation = fact.relation;
  inst.query = gen.Query(fact, rng);
  inst.gold = gen.Generate(fact, DocType::kGold, rng);
  return inst;
}

}  // namespace

RetrievalInstance BuildTrainInstance(const Fact& fact,
                                     const TaskGenConfig& cfg,
                                     const DocumentGenerator& gen,
                                     std::uint64_t base_seed, int epoch) {
  if (cfg.negatives_per_type < 1) {
    throw Error("negatives_per_type must be at least 1");
  }
  RetrievalInstance inst = QueryAndGold(fact, gen, base_seed);
  Rng rng(SeedHasher()
              .Add("negatives")
              .Add(base_seed)
              .Add(fact.uid)
              .Add(static_cast<std::uint64_t>(epoch))
              .Finish());
  for (DocType type : kTrainingNegativeTypes) {
    for (int i = 0; i < cfg.negatives_per_type; ++i) {
      inst.negatives.push_back(gen.Generate(fact, type, rng));
    }
  }
  return inst;
}

RetrievalInstance BuildEvalInstance(const Fact& fact, const TaskGenConfig& cfg,
                                    const DocumentGenerator& gen,
                                    std::uint64_t base_seed) {
  RetrievalInstance inst = QueryAndGold(fact, gen, base_seed);
  Rng rng(
      SeedHasher().Add("distractors").Add(base_seed).Add(fact.uid).Finish());
  for (DocType type : cfg.inference_types) {
    if (type == DocType::kHR_) {
      for (Document& d : gen.EnumerateTails(fact, rng)) {
        inst.negatives.push_back(std::move(d));
      }
      continue;
    }
    const int count = type == DocType::kUnrelatedTrue
                          ? cfg.unrelated_true_count
                          : cfg.eval_samples_per_type;
    for (int i = 0; i < count; ++i) {
      inst.negatives.push_back(gen.Generate(fact, type, rng));
    }
  }
  return inst;
}

std::string_view SplitKindName(SplitKind kind) {
  return kind == SplitKind::kIid ? "iid" : "ood_relation";
}

SplitKind ParseSplitKind(std::string_view name) {
  if (name == "iid") return SplitKind::kIid;
  if (name == "ood" || name == "ood_relation") return SplitKind::kOodRelation;
  throw Error(fmt::format("unknown split kind '{}'", name));
}

json TaskSplit::ToJson() const {
  json j{{"kind", SplitKindName(kind)},
         {"seed", seed},
         {"ratio", ratio},
         {"train", train},
         {"test", test}};
  if (kind == SplitKind::kOodRelation) {
    j["train_relations"] = train_relations;
    j["test_relations"] = test_relations;
  }
  return j;
}

TaskSplit TaskSplit::FromJson(const json& j) {
  TaskSplit s;
  s.kind = ParseSplitKind(j.at("kind").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  s.ratio = j.at("ratio").get<double>();
  s.train = j.at("train").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  if (s.kind == SplitKind::kOodRelation) {
    s.train_relations = j.at("train_relations").get<std::vector<std::string>>();
    s.test_relations = j.at("test_relations").get<std::vector<std::string>>();
  }
  return s;
}

TaskSplit SplitIid(const FactSet& snapshot, double ratio, std::uint64_t seed) {
  if (snapshot.size() < 2) throw Error("a split needs at least two facts");
  if (ratio <= 0.0 || ratio >= 1.0) throw Error("split ratio must lie in (0, 1)");
  std::vector<std::string> uids;
  for (const Fact& f : snapshot.facts()) uids.push_back(f.uid);
  std::vector<std::string> shuffled = uids;
  Rng rng(SeedHasher().Add("split-iid").Add(seed).Finish());
  Shuffle(shuffled, rng);
  const std::size_t k = ClampedCount(ratio, uids.size());
  const std::set<std::string> train(shuffled.begin(),
                                    shuffled.begin() + static_cast<long>(k));
  TaskSplit s;
  s.kind = SplitKind::kIid;
  s.seed = seed;
  s.ratio = ratio;
  for (const std::string& uid : uids) {
    (train.contains(uid) ? s.train : s.test).push_back(uid);
  }
  return s;
}

TaskSplit SplitOodByRelation(const FactSet& snapshot, double ratio,
                             std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0) throw Error("split ratio must lie in (0, 1)");
  if (snapshot.relations().size() < 2) {
    throw Error("OOD split impossible: the snapshot has fewer than two "
                "relations");
  }
  std::vector<std::string> relations(snapshot.relations().begin(),
                                     snapshot.relations().end());
  std::vector<std::string> shuffled = relations;
  Rng rng(SeedHasher().Add("split-ood").Add(seed).Finish());
  Shuffle(shuffled, rng);
  const std::size_t k = ClampedCount(ratio, relations.size());
  const std::set<std::string> train_rel(
      shuffled.begin(), shuffled.begin() + static_cast<long>(k));
  TaskSplit s;
  s.kind = SplitKind::kOodRelation;
  s.seed = seed;
  s.ratio = ratio;
  for (const std::string& r : relations) {
    (train_rel.contains(r) ? s.train_relations : s.test_relations).push_back(r);
  }
  for (const Fact& f : snapshot.facts()) {
    (train_rel.contains(f.relation) ? s.train : s.test).push_back(f.uid);
  }
  return s;
}

TaskSplit MakeSplit(const FactSet& snapshot, SplitKind kind, double ratio,
                    std::uint64_t seed) {
  return kind == SplitKind::kIid ? SplitIid(snapshot, ratio, seed)
                                 : SplitOodByRelation(snapshot, ratio, seed);
}

KnowledgeSnapshot SubsampleSnapshot(const KnowledgeSnapshot& snapshot,
                                    double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error("subsample fraction must lie in (0, 1]");
  }
  if (fraction == 1.0) return snapshot;
  const std::size_t n = snapshot.facts.size();
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::vector<std::string> uids;
  for (const Fact& f : snapshot.facts.facts()) uids.push_back(f.uid);
  Rng rng(SeedHasher().Add("subsample").Add(seed).Finish());
  Shuffle(uids, rng);
  uids.resize(k);
  KnowledgeSnapshot out = snapshot;
  out.facts = snapshot.facts.Select(
      uids, fmt::format("{}/f{}", snapshot.facts.source(), fraction));
  out.extraction_fraction =
      snapshot.diagnostic_size == 0
          ? 0.0
          : static_cast<double>(out.facts.size()) /
                static_cast<double>(snapshot.diagnostic_size);
  return out;
}

std::uint64_t TaskBaseSeed(std::uint64_t split_seed) {
  return SeedHasher().Add("task").Add(split_seed).Finish();
}

TaskBundle BuildTask(const FactSet& snapshot, const TemplatePack& pack,
                     const TaskSplit& split, const TaskGenConfig& cfg) {
  pack.RequireCoverage(snapshot);
  TaskBundle task;
  task.split = split;
  task.cfg = cfg;
  task.base_seed = TaskBaseSeed(split.seed);
  task.snapshot = snapshot;
  task.train_facts = snapshot.Select(split.train, "train");
  task.test_facts = snapshot.Select(split.test, "test");
  if (task.train_facts.size() != split.train.size() ||
      task.test_facts.size() != split.test.size()) {
    throw Error("split refers to facts outside the snapshot");
  }
  {
    const DocumentGenerator gen = TrainingGenerator(task, pack);
    for (const Fact& f : task.train_facts.facts()) {
      task.train.push_back(BuildTrainInstance(f, cfg, gen, task.base_seed, 0));
    }
  }
  const DocumentGenerator eval_gen(pack, BuildEntityPools(task.snapshot),
                                   task.snapshot, &task.test_facts);
  for (const Fact& f : task.test_facts.facts()) {
    task.eval.push_back(BuildEvalInstance(f, cfg, eval_gen, task.base_seed));
  }
  return task;
}

DocumentGenerator TrainingGenerator(const TaskBundle& task,
                                    const TemplatePack& pack) {
  return DocumentGenerator(pack, BuildEntityPools(task.train_facts),
                           task.snapshot);
}

void SaveTask(const TaskBundle& task, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WriteJson(dir / "split.json", task.split.ToJson());
  WriteJson(dir / "task.json",
            json{{"base_seed", task.base_seed}, {"config", task.cfg.ToJson()}});
  SaveFacts(task.snapshot, dir / "facts.jsonl");
  // Evaluation files run to millions of documents; serialize one line at a
  // time instead of building a json array.
  auto write_lines = [](const std::filesystem::path& path,
                        const std::vector<RetrievalInstance>& instances) {
    std::string out;
    for (const auto& inst : instances) {
      out += InstanceToJson(inst).dump();
      out += '\n';
    }
    WriteFile(path, out);
  };
  write_lines(dir / "train.jsonl", task.train);
  write_lines(dir / "eval.jsonl", task.eval);
}

TaskBundle LoadTask(const std::filesystem::path& dir) {
  TaskBundle task;
  task.split = TaskSplit::FromJson(ReadJson(dir / "split.json"));
  const json meta = ReadJson(dir / "task.json");
  task.base_seed = meta.at("base_seed").get<std::uint64_t>();
  task.cfg = TaskGenConfig::FromJson(meta.at("config"));
  task.snapshot = LoadFacts(dir / "facts.jsonl", FactFormat::kCanonical);
  task.train_facts = task.snapshot.Select(task.split.train, "train");
  task.test_facts = task.snapshot.Select(task.split.test, "test");
  ForEachJsonLine(dir / "train.jsonl", [&](std::size_t, const json& j) {
    task.train.push_back(InstanceFromJson(j));
  });
  ForEachJsonLine(dir / "eval.jsonl", [&](std::size_t, const json& j) {
    task.eval.push_back(InstanceFromJson(j));
  });
  return task;
}

}  // namespace xteval
