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

// The model-backend contract consumed by extraction, finetuning and
// evaluation.
//
// A backend exposes two differentiable forward passes:
//
//   * ForwardTail: the vocabulary distribution at the tail slot of a
//     soft-prompted relational query (mask position for masked encoders,
//     next-token position for causal decoders);
//   * ForwardScores: cross-encoder relevance scores sim(q, d) for a query
//     against a list of documents, read by a ScoringHead from the pooled
//     representation ([CLS] for encoders, the last input token for
//     decoders).
//
// Losses and optimizers live with the callers. A pass only turns upstream
// gradients into parameter gradients.

#ifndef XTEVAL_BACKEND_H_
#define XTEVAL_BACKEND_H_

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xteval/common.h"
#include "xteval/document.h"
#include "xteval/nn.h"
#include "xteval/tokenizer.h"

namespace xteval {

enum class ArchitectureKind { kEncoderMasked, kDecoderCausal };

std::string_view ArchitectureName(ArchitectureKind kind);
ArchitectureKind ParseArchitecture(std::string_view name);

enum class ParameterGroup { kSoftPrompts, kScoringHead, kFullModel };

// Number of soft-prompt vectors placed before and after the head entity.
inline constexpr int kPromptLength = 3;

// Linear map from the pooled representation to a scalar score.
class ScoringHead {
 public:
  // Fresh initialization: weight ~ Normal(0, 1/sqrt(dim)), bias 0.
  ScoringHead(std::size_t dim, std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::size_t dim() const { return static_cast<std::size_t>(weight_.value.cols()); }
  nn::Parameter& weight() { return weight_; }
  nn::Parameter& bias() { return bias_; }
  const nn::Parameter& weight() const { return weight_; }
  const nn::Parameter& bias() const { return bias_; }
  std::vector<nn::Parameter*> Parameters() { return {&weight_, &bias_}; }

  json ToJson() const;
  static ScoringHead FromJson(const json& j);

 private:
  std::uint64_t seed_;
  nn::Parameter weight_;
  nn::Parameter bias_;
};

// A relational query ready for the tail forward pass. The embedded
// sequence is prefix (kPromptLength rows of `prompt`), the head tokens,
// suffix (the remaining kPromptLength rows), then the tail slot.
struct AssembledPrompt {
  std::string relation;
  // Provenance only. Neural backends never read it.
  std::string fact_uid;
  std::vector<TokenId> head_tokens;
  // 2 * kPromptLength x embedding_dim. Gradients accumulate here.
  nn::Parameter* prompt = nullptr;
};

class TailPass {
 public:
  virtual ~TailPass() = default;
  virtual std::span<const double> logits() const = 0;
  // Accumulates d loss / d prompt into the prompt parameter's gradient.
  virtual void Backward(std::span<const double> logit_grads) = 0;
};

class ScorePass {
 public:
  virtual ~ScorePass() = default;
  virtual std::span<const double> scores() const = 0;
  // Accumulates into the model's full-model parameters and the head.
  virtual void Backward(std::span<const double> score_grads) = 0;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual const std::string& id() const = 0;
  virtual std::string_view type() const = 0;
  virtual ArchitectureKind architecture() const = 0;
  virtual const Tokenizer& tokenizer() const = 0;
  virtual std::size_t embedding_dim() const = 0;
  virtual std::size_t context_length() const = 0;
  // Root-mean-square of the token embedding entries; soft prompts are
  // initialized at this scale.
  virtual double embedding_rms() const = 0;
  // False for backends whose passes carry no gradient (the oracle).
  virtual bool differentiable() const = 0;

  // Embedded input rows of the tail pass (without positional terms).
  virtual nn::Matrix EmbedPrompt(const AssembledPrompt& prompt) const = 0;
  virtual std::unique_ptr<TailPass> ForwardTail(
      const AssembledPrompt& prompt) const = 0;
  virtual std::unique_ptr<ScorePass> ForwardScores(
      ScoringHead& head, std::string_view query,
      std::span<const Document* const> documents) = 0;

  virtual std::vector<nn::Parameter*> Parameters(ParameterGroup group) = 0;
  virtual std::size_t ParameterCount() const = 0;

  virtual std::unique_ptr<ModelBackend> Clone() const = 0;
  // Writes manifest.json plus whatever the backend needs to reload.
  virtual void Save(const std::filesystem::path& dir) const = 0;
  virtual json Manifest() const = 0;
};

// Vocabulary ranking at the tail slot: descending score, ties broken by
// the lower token id.
std::vector<std::pair<TokenId, double>> PredictTailDistribution(
    const ModelBackend& backend, const AssembledPrompt& prompt);

// Strict argmax with lowest-index tiebreak.
TokenId TopToken(std::span<const double> logits);

double ScorePair(ModelBackend& backend, ScoringHead& head,
                 std::string_view query, const Document& document);

std::vector<double> ScoreCandidates(ModelBackend& backend, ScoringHead& head,
                                    std::string_view query,
                                    std::span<const Document* const> documents);

}  // namespace xteval

#endif  // XTEVAL_BACKEND_H_
