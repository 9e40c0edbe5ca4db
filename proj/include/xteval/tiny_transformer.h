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

// A small pre-LN transformer that can be pretrained from scratch on CPU,
// either as a masked encoder or as a causal decoder. It exists so the whole
// extract / train / evaluate loop can be exercised on a real gradient-based
// model without external checkpoints.

#ifndef XTEVAL_TINY_TRANSFORMER_H_
#define XTEVAL_TINY_TRANSFORMER_H_

#include <memory>
#include <string>
#include <vector>

#include "xteval/backend.h"
#include "xteval/kb.h"
#include "xteval/templates.h"

namespace xteval {

struct TinyTransformerOptions {
  ArchitectureKind architecture = ArchitectureKind::kDecoderCausal;
  int dim = 48;
  int layers = 2;
  int ffn_dim = 96;
  int context_length = 48;
  // Pretraining on template renderings of the corpus facts.
  int pretrain_epochs = 200;
  double pretrain_lr = 3e-3;
  int pretrain_batch = 16;
  // Share of corpus facts the model sees during pretraining. Facts left out
  // can only be predicted by chance.
  double pretrain_fraction = 0.8;
  // Sentences start at a random position in [0, max_position_offset] so
  // that prompts of any prefix length land on trained positions.
  int max_position_offset = 4;
  std::uint64_t seed = 0;
  // When false, overlong cross-encoder inputs are an error. When true, the
  // document is cut from the right to fit.
  bool truncate_documents = false;

  json ToJson() const;
  static TinyTransformerOptions FromJson(const json& j,
                                         ArchitectureKind default_kind);
};

struct PretrainReport {
  std::vector<double> epoch_loss;
  std::size_t sentences = 0;
  std::size_t seen_facts = 0;
};

class TinyTransformerBackend final : public ModelBackend {
 public:
  // Random initialization over the given vocabulary.
  TinyTransformerBackend(std::string id, TinyTransformerOptions options,
                         Tokenizer tokenizer);

  // Builds the vocabulary from corpus entities and template words, then
  // pretrains on template renderings of a seeded subset of the corpus.
  static std::unique_ptr<TinyTransformerBackend> Pretrain(
      std::string id, const TinyTransformerOptions& options,
      const FactSet& corpus, const TemplatePack& templates,
      PretrainReport* report = nullptr);

  const std::string& id() const override { return id_; }
  std::string_view type() const override {
    return options_.architecture == ArchitectureKind::kEncoderMasked
               ? "tiny-mlm"
               : "tiny-causal";
  }
  ArchitectureKind architecture() const override {
    return options_.architecture;
  }
  const Tokenizer& tokenizer() const override { return tokenizer_; }
  std::size_t embedding_dim() const override {
    return static_cast<std::size_t>(options_.dim);
  }
  std::size_t context_length() const override {
    return static_cast<std::size_t>(options_.context_length);
  }
  double embedding_rms() const override;
  bool differentiable() const override { return true; }

  nn::Matrix EmbedPrompt(const AssembledPrompt& prompt) const override;
  std::unique_ptr<TailPass> ForwardTail(
      const AssembledPrompt& prompt) const override;
  std::unique_ptr<ScorePass> ForwardScores(
      ScoringHead& head, std::string_view query,
      std::span<const Document* const> documents) override;

  std::vector<nn::Parameter*> Parameters(ParameterGroup group) override;
  std::size_t ParameterCount() const override;

  std::unique_ptr<ModelBackend> Clone() const override;
  void Save(const std::filesystem::path& dir) const override;
  json Manifest() const override;
  static std::unique_ptr<TinyTransformerBackend> Load(
      const std::filesystem::path& dir);

  // Final-layer hidden states (after the output LayerNorm), one row per
  // input token.
  nn::Matrix HiddenStates(std::span<const TokenId> tokens) const;
  // Token sequence fed to the cross-encoder for (query, document).
  std::vector<TokenId> CrossEncoderInput(std::string_view query,
                                         std::string_view document) const;
  // Row of HiddenStates that the scoring head reads.
  std::size_t PooledPosition(std::size_t sequence_length) const;

  const TinyTransformerOptions& options() const { return options_; }

 private:
  struct Layer {
    nn::Parameter ln1_gain, ln1_bias;
    nn::Parameter query, key, value, output;
    nn::Parameter ln2_gain, ln2_bias;
    nn::Parameter ffn_in, ffn_in_bias, ffn_out, ffn_out_bias;
  };

  // Tape handles for every weight, bound either as trainable leaves or as
  // frozen references.
  struct Bound {
    nn::Var token_embedding, position_embedding;
    struct LayerVars {
      nn::Var ln1_gain, ln1_bias, query, key, value, output;
      nn::Var ln2_gain, ln2_bias, ffn_in, ffn_in_bias, ffn_out, ffn_out_bias;
    };
    std::vector<LayerVars> layers;
    nn::Var final_gain, final_bias, output_bias;
  };

  Bound Bind(nn::Tape& tape, bool trainable);
  Bound BindFrozen(nn::Tape& tape) const;
  nn::Var EmbedTokens(nn::Tape& tape, const Bound& bound,
                      std::span<const TokenId> tokens) const;
  // Adds positions starting at `offset`, runs the blocks and the final
  // LayerNorm.
  nn::Var Encode(nn::Tape& tape, const Bound& bound, nn::Var embedded,
                 int offset) const;
  nn::Var Logits(nn::Tape& tape, const Bound& bound, nn::Var hidden_rows) const;

  std::vector<nn::Parameter*> AllParameters();
  std::vector<const nn::Parameter*> AllParameters() const;

  double PretrainEpoch(const std::vector<std::vector<TokenId>>& sentences,
                       const std::vector<std::size_t>& tail_positions,
                       nn::AdamW& optimizer,
                       const nn::PolynomialDecaySchedule& schedule,
                       long& step, Rng& rng);

  std::string id_;
  TinyTransformerOptions options_;
  Tokenizer tokenizer_;
  nn::Parameter token_embedding_;
  nn::Parameter position_embedding_;
  std::vector<Layer> layers_;
  nn::Parameter final_gain_, final_bias_;
  nn::Parameter output_bias_;
};

}  // namespace xteval

#endif  // XTEVAL_TINY_TRANSFORMER_H_
