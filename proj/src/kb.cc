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

#include "xteval/kb.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <fmt/format.h>

namespace xteval {

std::string FactUid(std::string_view head, std::string_view relation,
                    std::string_view tail) {
  std::string joined;
  joined.reserve(head.size() + relation.size() + tail.size() + 2);
  joined.append(head).push_back('\x1f');
  joined.append(relation).push_back('\x1f');
  joined.append(tail);
  return Sha256Hex(joined).substr(0, 16);
}

Fact Fact::Make(std::string_view head, std::string_view relation,
                std::string_view tail) {
  Fact f{NormalizeWhitespace(head), NormalizeWhitespace(relation),
         NormalizeWhitespace(tail), {}};
  if (f.head.empty()) throw Error("fact has an empty head");
  if (f.relation.empty()) throw Error("fact has an empty relation");
  if (f.tail.empty()) throw Error("fact has an empty tail");
  f.uid = FactUid(f.head, f.relation, f.tail);
  return f;
}

FactSet::FactSet(std::vector<Fact> facts, std::string source)
    : source_(std::move(source)) {
  facts_.reserve(facts.size());
  for (Fact& f : facts) {
    if (index_.contains(f.uid)) continue;
    index_.emplace(f.uid, facts_.size());
    relations_.insert(f.relation);
    facts_.push_back(std::move(f));
  }
}

bool FactSet::Contains(std::string_view uid) const {
  return index_.contains(std::string(uid));
}

const Fact* FactSet::Find(std::string_view uid) const {
  auto it = index_.find(std::string(uid));
  return it == index_.end() ? nullptr : &facts_[it->second];
}

bool FactSet::ContainsTriple(std::string_view head, std::string_view relation,
                             std::string_view tail) const {
  return Contains(FactUid(head, relation, tail));
}

FactSet FactSet::Filter(const std::function<bool(const Fact&)>& keep,
                        std::string source) const {
  std::vector<Fact> kept;
  for (const Fact& f : facts_) {
    if (keep(f)) kept.push_back(f);
  }
  return FactSet(std::move(kept), std::move(source));
}

FactSet FactSet::Select(const std::vector<std::string>& uids,
                        std::string source) const {
  std::unordered_set<std::string> wanted(uids.begin(), uids.end());
  return Filter([&](const Fact& f) { return wanted.contains(f.uid); },
                std::move(source));
}

FactFormat ParseFactFormat(std::string_view name) {
  if (name == "lama_jsonl") return FactFormat::kLamaJsonl;
  if (name == "tsv") return FactFormat::kTsv;
  if (name == "canonical") return FactFormat::kCanonical;
  throw Error("unknown fact format '" + std::string(name) +
              "' (expected lama_jsonl, tsv or canonical)");
}

std::string_view FactFormatName(FactFormat format) {
  switch (format) {
    case FactFormat::kLamaJsonl:
      return "lama_jsonl";
    case FactFormat::kTsv:
      return "tsv";
    case FactFormat::kCanonical:
      return "canonical";
  }
  return "unknown";
}

namespace {

std::string StringField(const json& record, std::initializer_list<const char*>
                                                names,
                        const std::filesystem::path& path,
                        std::size_t line_no) {
  for (const char* name : names) {
    auto it = record.find(name);
    if (it != record.end() && it->is_string()) return it->get<std::string>();
  }
  throw Error(fmt::format("{}:{}: malformed record, missing string field '{}'",
                          path.string(), line_no, *names.begin()));
}

Fact MakeAt(std::string_view h, std::string_view r, std::string_view t,
            const std::filesystem::path& path, std::size_t line_no) {
  try {
    return Fact::Make(h, r, t);
  } catch (const Error& e) {
    throw Error(fmt::format("{}:{}: malformed record, {}", path.string(),
                            line_no, e.what()));
  }
}

}  // namespace

FactSet LoadFacts(const std::filesystem::path& path, FactFormat format) {
  if (!std::filesystem::exists(path)) {
    throw Error("fact file does not exist: " + path.string());
  }
  std::vector<Fact> facts;
  if (format == FactFormat::kTsv) {
    std::ifstream in(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (NormalizeWhitespace(line).empty()) continue;
      std::vector<std::string> cols;
      std::size_t start = 0;
      for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos;
           start = pos + 1) {
        cols.push_back(line.substr(start, pos - start));
      }
      cols.push_back(line.substr(start));
      if (cols.size() != 3) {
        throw Error(fmt::format(
            "{}:{}: malformed record, expected 3 tab-separated fields, got {}",
            path.string(), line_no, cols.size()));
      }
      facts.push_back(MakeAt(cols[0], cols[1], cols[2], path, line_no));
    }
  } else {
    const bool lama = format == FactFormat::kLamaJsonl;
    ForEachJsonLine(path, [&](std::size_t line_no, const json& record) {
      if (!record.is_object()) {
        throw Error(fmt::format("{}:{}: malformed record, expected an object",
                                path.string(), line_no));
      }
      std::string h = StringField(record, {lama ? "sub_label" : "head"}, path,
                                  line_no);
      std::string r =
          lama ? StringField(record, {"predicate_id", "relation"}, path, line_no)
               : StringField(record, {"relation"}, path, line_no);
      std::string t = StringField(record, {lama ? "obj_label" : "tail"}, path,
                                  line_no);
      Fact f = MakeAt(h, r, t, path, line_no);
      if (!lama && record.contains("uid") && record["uid"] != f.uid) {
        throw Error(fmt::format("{}:{}: uid does not match triple content",
                                path.string(), line_no));
      }
      facts.push_back(std::move(f));
    });
  }
  FactSet set(std::move(facts), path.string());
  if (set.empty()) throw Error("no facts loaded from " + path.string());
  return set;
}

void SaveFacts(const FactSet& facts, const std::filesystem::path& path) {
  std::vector<json> records;
  records.reserve(facts.size());
  for (const Fact& f : facts.facts()) {
    records.push_back(json{{"uid", f.uid},
                           {"head", f.head},
                           {"relation", f.relation},
                           {"tail", f.tail}});
  }
  WriteJsonLines(path, records);
}

TailFilterResult FilterSingleTokenTails(const FactSet& facts,
                                        const Tokenizer& tokenizer) {
  TailFilterResult result;
  result.facts = facts.Filter(
      [&](const Fact& f) {
        std::vector<std::string> pieces = Tokenizer::Split(f.tail);
        return pieces.size() == 1 && tokenizer.Contains(pieces.front());
      },
      facts.source());
  result.dropped = facts.size() - result.facts.size();
  if (result.facts.empty()) {
    result.warning = fmt::format(
        "single-token tail filter removed all {} facts", facts.size());
  }
  return result;
}

EntityPools BuildEntityPools(const FactSet& facts) {
  if (facts.empty()) throw Error("cannot build entity pools from no facts");
  EntityPools pools;
  std::set<std::string> heads, tails;
  std::map<std::string, std::set<std::string>> hr, tr;
  for (const Fact& f : facts.facts()) {
    hr[f.relation].insert(f.head);
    tr[f.relation].insert(f.tail);
    heads.insert(f.head);
    tails.insert(f.tail);
  }
  for (auto& [rel, s] : hr) pools.heads_by_relation[rel].assign(s.begin(), s.end());
  for (auto& [rel, s] : tr) pools.tails_by_relation[rel].assign(s.begin(), s.end());
  pools.all_relations.assign(facts.relations().begin(),
                             facts.relations().end());
  pools.all_heads.assign(heads.begin(), heads.end());
  pools.all_tails.assign(tails.begin(), tails.end());
  return pools;
}

Holdout StratifiedHoldout(const FactSet& facts, double fraction,
                          std::uint64_t seed, bool at_least_one) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw Error("holdout fraction must lie in [0, 1)");
  }
  std::map<std::string, std::vector<std::string>> by_relation;
  for (const Fact& f : facts.facts()) by_relation[f.relation].push_back(f.uid);
  std::set<std::string> held;
  std::string largest;
  std::size_t largest_size = 0;
  for (auto& [relation, uids] : by_relation) {
    Rng rng(SeedHasher().Add("holdout").Add(seed).Add(relation).Finish());
    Shuffle(uids, rng);
    const auto n = uids.size();
    const auto take = std::min<std::size_t>(
        n - 1, static_cast<std::size_t>(
                   std::lround(fraction * static_cast<double>(n))));
    held.insert(uids.begin(), uids.begin() + static_cast<long>(take));
    if (n > largest_size) {
      largest_size = n;
      largest = relation;
    }
  }
  if (held.empty() && at_least_one) {
    if (largest_size < 2) {
      throw Error("cannot hold out a fact without emptying a relation");
    }
    held.insert(by_relation[largest].front());
  }
  Holdout out;
  out.kept = facts.Filter(
      [&](const Fact& f) { return !held.contains(f.uid); },
      facts.source() + "/kept");
  out.held = facts.Filter([&](const Fact& f) { return held.contains(f.uid); },
                          facts.source() + "/held");
  return out;
}

}  // namespace xteval
