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

#ifndef XTEVAL_ORACLE_BACKEND_H_
#define XTEVAL_ORACLE_BACKEND_H_

#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "xteval/backend.h"
#include "xteval/kb.h"

namespace xteval {

struct OracleOptions {
  double knowledge_rate = 0.34;
  double utilization_rate = 0.5;
  std::uint64_t seed = 0;
  ArchitectureKind architecture = ArchitectureKind::kDecoderCausal;
  std::size_t context_length = 512;

  json ToJson() const;
  static OracleOptions FromJson(const json& j);
};

// Test double with a known ground truth.
//
// Each fact of the universe is known independently with probability
// knowledge_rate (a seeded draw keyed by uid). For a known fact the gold
// tail is ranked first at the tail slot; otherwise a seeded decoy tail is.
//
// Scoring decides per instance (keyed by the originating fact uid and the
// scoring head seed) whether the gold document wins. If it does, the gold
// document scores 2 and every distractor lies in [0, 1); if not, gold
// scores -1 and the highest distractor is a seeded-random one.
class OracleBackend final : public ModelBackend {
 public:
  OracleBackend(std::string id, OracleOptions options, FactSet universe);

  const std::string& id() const override { return id_; }
  std::string_view type() const override { return "oracle"; }
  ArchitectureKind architecture() const override {
    return options_.architecture;
  }
  const Tokenizer& tokenizer() const override { return tokenizer_; }
  std::size_t embedding_dim() const override { return 4; }
  std::size_t context_length() const override {
    return options_.context_length;
  }
  double embedding_rms() const override { return 1.0; }
  bool differentiable() const override { return false; }

  nn::Matrix EmbedPrompt(const AssembledPrompt& prompt) const override;
  std::unique_ptr<TailPass> ForwardTail(
      const AssembledPrompt& prompt) const override;
  std::unique_ptr<ScorePass> ForwardScores(
      ScoringHead& head, std::string_view query,
      std::span<const Document* const> documents) override;

  std::vector<nn::Parameter*> Parameters(ParameterGroup) override {
    return {};
  }
  std::size_t ParameterCount() const override { return 0; }

  std::unique_ptr<ModelBackend> Clone() const override;
  void Save(const std::filesystem::path& dir) const override;
  json Manifest() const override;
  static std::unique_ptr<OracleBackend> Load(const std::filesystem::path& dir);

  const OracleOptions& options() const { return options_; }
  bool Knows(std::string_view uid) const;
  const std::unordered_set<std::string>& known_facts() const {
    return known_;
  }
  // The per-instance utilization draw for a given scoring head seed.
  bool Utilizes(std::string_view fact_uid, std::uint64_t head_seed) const;

 private:
  std::string id_;
  OracleOptions options_;
  FactSet universe_;
  Tokenizer tokenizer_;
  std::unordered_set<std::string> known_;
};

}  // namespace xteval

#endif  // XTEVAL_ORACLE_BACKEND_H_
