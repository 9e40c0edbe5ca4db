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

#include "xteval/oracle_backend.h"

#include <fmt/format.h>

namespace xteval {
namespace {

std::vector<std::string> UniverseWords(const FactSet& universe) {
  std::vector<std::string> words;
  for (const Fact& f : universe.facts()) {
    words.push_back(f.tail);
    words.push_back(f.head);
  }
  return words;
}

class OracleTailPass final : public TailPass {
 public:
  explicit OracleTailPass(std::vector<double> logits)
      : logits_(std::move(logits)) {}
  std::span<const double> logits() const override { return logits_; }
  void Backward(std::span<const double>) override {}

 private:
  std::vector<double> logits_;
};

class OracleScorePass final : public ScorePass {
 public:
  explicit OracleScorePass(std::vector<double> scores)
      : scores_(std::move(scores)) {}
  std::span<const double> scores() const override { return scores_; }
  void Backward(std::span<const double>) override {}

 private:
  std::vector<double> scores_;
};

}  // namespace

json OracleOptions::ToJson() const {
  return json{{"knowledge_rate", knowledge_rate},
              {"utilization_rate", utilization_rate},
              {"seed", seed},
              {"architecture", ArchitectureName(architecture)},
              {"context_length", context_length}};
}

OracleOptions OracleOptions::FromJson(const json& j) {
  OracleOptions o;
  StrictObject obj(j, "oracle backend options");
  o.knowledge_rate = obj.Get("knowledge_rate", o.knowledge_rate);
  o.utilization_rate = obj.Get("utilization_rate", o.utilization_rate);
  o.seed = obj.Get<std::uint64_t>("seed", o.seed);
  o.architecture = ParseArchitecture(obj.Get<std::string>(
      "architecture", std::string(ArchitectureName(o.architecture))));
  o.context_length = obj.Get<std::size_t>("context_length", o.context_length);
  obj.Finish();
  if (o.knowledge_rate < 0.0 || o.knowledge_rate > 1.0 ||
      o.utilization_rate < 0.0 || o.utilization_rate > 1.0) {
    throw Error("oracle rates must lie in [0, 1]");
  }
  return o;
}

OracleBackend::OracleBackend(std::string id, OracleOptions options,
                             FactSet universe)
    : id_(std::move(id)),
      options_(options),
      universe_(std::move(universe)),
      tokenizer_(UniverseWords(universe_)) {
  for (const Fact& f : universe_.facts()) {
    const double draw = UnitInterval(
        SeedHasher().Add("oracle-known").Add(options_.seed).Add(f.uid).Finish());
    // Strict comparison keeps rate 0 empty and rate 1 complete.
    if (draw < options_.knowledge_rate) known_.insert(f.uid);
  }
}

bool OracleBackend::Knows(std::string_view uid) const {
  return known_.contains(std::string(uid));
}

bool OracleBackend::Utilizes(std::string_view fact_uid,
                             std::uint64_t head_seed) const {
  const double draw = UnitInterval(SeedHasher()
                                       .Add("oracle-utilize")
                                       .Add(options_.seed)
                                       .Add(head_seed)
                                       .Add(fact_uid)
                                       .Finish());
  return draw < options_.utilization_rate;
}

nn::Matrix OracleBackend::EmbedPrompt(const AssembledPrompt& prompt) const {
  const auto rows = static_cast<Eigen::Index>(2 * kPromptLength +
                                              prompt.head_tokens.size() + 1);
  return nn::Matrix::Zero(rows, static_cast<Eigen::Index>(embedding_dim()));
}

std::unique_ptr<TailPass> OracleBackend::ForwardTail(
    const AssembledPrompt& prompt) const {
  const std::size_t length = 2 * kPromptLength + prompt.head_tokens.size() + 1;
  if (length > context_length()) {
    throw Error(fmt::format("prompt of {} positions exceeds context length {}",
                            length, context_length()));
  }
  std::vector<double> logits(tokenizer_.vocab_size(), 0.0);
  for (int i = 0; i < Tokenizer::kNumSpecial; ++i) logits[i] = -1.0;
  const Fact* fact = universe_.Find(prompt.fact_uid);
  if (fact == nullptr) return std::make_unique<OracleTailPass>(logits);

  const TokenId gold = tokenizer_.Lookup(fact->tail);
  if (Knows(fact->uid)) {
    logits[gold] = 1.0;
  } else {
    // Decoy: a seeded non-gold, non-special token.
    const std::size_t choices =
        tokenizer_.vocab_size() - Tokenizer::kNumSpecial - 1;
    if (choices > 0) {
      Rng rng(SeedHasher().Add("oracle-decoy").Add(options_.seed).Add(fact->uid).Finish());
      auto decoy = static_cast<TokenId>(Tokenizer::kNumSpecial +
                                        UniformIndex(rng, choices));
      if (decoy >= gold) ++decoy;
      logits[decoy] = 1.0;
    }
    logits[gold] = 0.5;
  }
  return std::make_unique<OracleTailPass>(std::move(logits));
}

std::unique_ptr<ScorePass> OracleBackend::ForwardScores(
    ScoringHead& head, std::string_view /*query*/,
    std::span<const Document* const> documents) {
  std::vector<double> scores;
  scores.reserve(documents.size());
  for (const Document* doc : documents) {
    if (doc->doc_type == DocType::kGold) {
      scores.push_back(Utilizes(doc->fact_uid, head.seed()) ? 2.0 : -1.0);
    } else {
      scores.push_back(UnitInterval(SeedHasher()
                                        .Add("oracle-distractor")
                                        .Add(options_.seed)
                                        .Add(head.seed())
                                        .Add(doc->fact_uid)
                                        .Add(DocTypeName(doc->doc_type))
                                        .Add(doc->text)
                                        .Finish()));
    }
  }
  return std::make_unique<OracleScorePass>(std::move(scores));
}

std::unique_ptr<ModelBackend> OracleBackend::Clone() const {
  return std::make_unique<OracleBackend>(*this);
}

json OracleBackend::Manifest() const {
  return json{{"id", id_},
              {"type", "oracle"},
              {"architecture_kind", ArchitectureName(options_.architecture)},
              {"parameter_count", 0},
              {"options", options_.ToJson()},
              {"universe_size", universe_.size()},
              {"known_facts", known_.size()}};
}

void OracleBackend::Save(const std::filesystem::path& dir) const {
  SaveFacts(universe_, dir / "universe.jsonl");
  WriteJson(dir / "manifest.json", Manifest());
}

std::unique_ptr<OracleBackend> OracleBackend::Load(
    const std::filesystem::path& dir) {
  json manifest = ReadJson(dir / "manifest.json");
  return std::make_unique<OracleBackend>(
      manifest.at("id").get<std::string>(),
      OracleOptions::FromJson(manifest.at("options")),
      LoadFacts(dir / "universe.jsonl", FactFormat::kCanonical));
}

}  // namespace xteval
