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

#include "xteval/tiny_transformer.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace xteval {
namespace {

constexpr char kParamsMagic[8] = {'X', 'T', 'P', 'A', 'R', 'M', '0', '1'};
// Stand-in for the tail while locating it inside a rendered sentence.
constexpr std::string_view kTailSentinel = "\x01";

class TinyTailPass final : public TailPass {
 public:
  TinyTailPass(std::unique_ptr<nn::Tape> tape, nn::Var logits)
      : tape_(std::move(tape)), logits_var_(logits) {
    const nn::Matrix& m = tape_->value(logits_var_);
    logits_.assign(m.data(), m.data() + m.size());
  }
  std::span<const double> logits() const override { return logits_; }
  void Backward(std::span<const double> grads) override {
    nn::Matrix g(1, static_cast<Eigen::Index>(grads.size()));
    std::copy(grads.begin(), grads.end(), g.data());
    tape_->Backward(logits_var_, g);
  }

 private:
  std::unique_ptr<nn::Tape> tape_;
  nn::Var logits_var_;
  std::vector<double> logits_;
};

class TinyScorePass final : public ScorePass {
 public:
  TinyScorePass(std::unique_ptr<nn::Tape> tape, nn::Var scores)
      : tape_(std::move(tape)), scores_var_(scores) {
    const nn::Matrix& m = tape_->value(scores_var_);
    scores_.assign(m.data(), m.data() + m.size());
  }
  std::span<const double> scores() const override { return scores_; }
  void Backward(std::span<const double> grads) override {
    nn::Matrix g(static_cast<Eigen::Index>(grads.size()), 1);
    std::copy(grads.begin(), grads.end(), g.data());
    tape_->Backward(scores_var_, g);
  }

 private:
  std::unique_ptr<nn::Tape> tape_;
  nn::Var scores_var_;
  std::vector<double> scores_;
};

std::vector<int> Range(int begin, int end) {
  std::vector<int> v(static_cast<std::size_t>(std::max(0, end - begin)));
  std::iota(v.begin(), v.end(), begin);
  return v;
}

std::vector<int> ToRows(std::span<const TokenId> tokens) {
  return std::vector<int>(tokens.begin(), tokens.end());
}

// A rendered pretraining sentence and the index of its first tail token.
struct Sentence {
  std::vector<TokenId> tokens;
  std::size_t tail_position = 0;
};

Sentence RenderSentence(const Tokenizer& tok, const Template& tmpl,
                        const Fact& fact) {
  const std::string text =
      RenderTemplate(tmpl, fact.head, tmpl.phrase, kTailSentinel);
  Sentence s;
  for (const std::string& piece : Tokenizer::Split(text)) {
    if (piece == kTailSentinel) {
      s.tail_position = s.tokens.size();
      for (TokenId t : tok.Encode(fact.tail)) s.tokens.push_back(t);
    } else {
      s.tokens.push_back(tok.Lookup(piece));
    }
  }
  return s;
}

}  // namespace

json TinyTransformerOptions::ToJson() const {
  return json{{"architecture", ArchitectureName(architecture)},
              {"dim", dim},
              {"layers", layers},
              {"ffn_dim", ffn_dim},
              {"context_length", context_length},
              {"pretrain_epochs", pretrain_epochs},
              {"pretrain_lr", pretrain_lr},
              {"pretrain_batch", pretrain_batch},
              {"pretrain_fraction", pretrain_fraction},
              {"max_position_offset", max_position_offset},
              {"seed", seed},
              {"truncate_documents", truncate_documents}};
}

TinyTransformerOptions TinyTransformerOptions::FromJson(
    const json& j, ArchitectureKind default_kind) {
  TinyTransformerOptions o;
  o.architecture = default_kind;
  StrictObject obj(j, "tiny transformer options");
  o.architecture = ParseArchitecture(obj.Get<std::string>(
      "architecture", std::string(ArchitectureName(o.architecture))));
  o.dim = obj.Get("dim", o.dim);
  o.layers = obj.Get("layers", o.layers);
  o.ffn_dim = obj.Get("ffn_dim", o.ffn_dim);
  o.context_length = obj.Get("context_length", o.context_length);
  o.pretrain_epochs = obj.Get("pretrain_epochs", o.pretrain_epochs);
  o.pretrain_lr = obj.Get("pretrain_lr", o.pretrain_lr);
  o.pretrain_batch = obj.Get("pretrain_batch", o.pretrain_batch);
  o.pretrain_fraction = obj.Get("pretrain_fraction", o.pretrain_fraction);
  o.max_position_offset =
      obj.Get("max_position_offset", o.max_position_offset);
  o.seed = obj.Get<std::uint64_t>("seed", o.seed);
  o.truncate_documents = obj.Get("truncate_documents", o.truncate_documents);
  obj.Finish();
  if (o.dim < 2 || o.layers < 1 || o.ffn_dim < 1 || o.context_length < 8 ||
      o.pretrain_batch < 1 || o.pretrain_epochs < 0 ||
      o.max_position_offset < 0) {
    throw Error("tiny transformer options out of range");
  }
  if (o.pretrain_fraction <= 0.0 || o.pretrain_fraction > 1.0) {
    throw Error("pretrain_fraction must lie in (0, 1]");
  }
  return o;
}

TinyTransformerBackend::TinyTransformerBackend(std::string id,
                                               TinyTransformerOptions options,
                                               Tokenizer tokenizer)
    : id_(std::move(id)),
      options_(options),
      tokenizer_(std::move(tokenizer)) {
  Rng rng(SeedHasher().Add("tiny-init").Add(options_.seed).Finish());
  const Eigen::Index d = options_.dim;
  const Eigen::Index f = options_.ffn_dim;
  const auto v = static_cast<Eigen::Index>(tokenizer_.vocab_size());
  const double wstd = 1.0 / std::sqrt(static_cast<double>(d));
  const double out_std = wstd / std::sqrt(2.0 * options_.layers);
  token_embedding_ =
      nn::Parameter("embed.tokens", nn::RandomNormal(v, d, 0.1, rng));
  position_embedding_ = nn::Parameter(
      "embed.positions",
      nn::RandomNormal(options_.context_length + options_.max_position_offset,
                       d, 0.1, rng));
  auto ones = [d] { return nn::Matrix::Ones(1, d); };
  auto zeros = [](Eigen::Index n) { return nn::Matrix::Zero(1, n); };
  for (int l = 0; l < options_.layers; ++l) {
    const std::string p = fmt::format("layer{}.", l);
    Layer layer;
    layer.ln1_gain = nn::Parameter(p + "ln1.gain", ones());
    layer.ln1_bias = nn::Parameter(p + "ln1.bias", zeros(d));
    layer.query = nn::Parameter(p + "attn.query", nn::RandomNormal(d, d, wstd, rng));
    layer.key = nn::Parameter(p + "attn.key", nn::RandomNormal(d, d, wstd, rng));
    layer.value = nn::Parameter(p + "attn.value", nn::RandomNormal(d, d, wstd, rng));
    layer.output =
        nn::Parameter(p + "attn.output", nn::RandomNormal(d, d, out_std, rng));
    layer.ln2_gain = nn::Parameter(p + "ln2.gain", ones());
    layer.ln2_bias = nn::Parameter(p + "ln2.bias", zeros(d));
    layer.ffn_in = nn::Parameter(p + "ffn.in", nn::RandomNormal(d, f, wstd, rng));
    layer.ffn_in_bias = nn::Parameter(p + "ffn.in_bias", zeros(f));
    layer.ffn_out = nn::Parameter(
        p + "ffn.out",
        nn::RandomNormal(f, d, out_std * std::sqrt(static_cast<double>(d) / f),
                         rng));
    layer.ffn_out_bias = nn::Parameter(p + "ffn.out_bias", zeros(d));
    layers_.push_back(std::move(layer));
  }
  final_gain_ = nn::Parameter("final.gain", ones());
  final_bias_ = nn::Parameter("final.bias", zeros(d));
  output_bias_ = nn::Parameter("output.bias", zeros(v));
}

std::vector<nn::Parameter*> TinyTransformerBackend::AllParameters() {
  std::vector<nn::Parameter*> out = {&token_embedding_, &position_embedding_};
  for (Layer& l : layers_) {
    for (nn::Parameter* p :
         {&l.ln1_gain, &l.ln1_bias, &l.query, &l.key, &l.value, &l.output,
          &l.ln2_gain, &l.ln2_bias, &l.ffn_in, &l.ffn_in_bias, &l.ffn_out,
          &l.ffn_out_bias}) {
      out.push_back(p);
    }
  }
  out.push_back(&final_gain_);
  out.push_back(&final_bias_);
  out.push_back(&output_bias_);
  return out;
}

std::vector<const nn::Parameter*> TinyTransformerBackend::AllParameters()
    const {
  auto mutable_params =
      const_cast<TinyTransformerBackend*>(this)->AllParameters();
  return {mutable_params.begin(), mutable_params.end()};
}

std::vector<nn::Parameter*> TinyTransformerBackend::Parameters(
    ParameterGroup group) {
  // Soft prompts and the scoring head are owned by their callers.
  if (group == ParameterGroup::kFullModel) return AllParameters();
  return {};
}

std::size_t TinyTransformerBackend::ParameterCount() const {
  std::size_t n = 0;
  for (const nn::Parameter* p : AllParameters()) n += p->size();
  return n;
}

double TinyTransformerBackend::embedding_rms() const {
  return std::sqrt(token_embedding_.value.squaredNorm() /
                   static_cast<double>(token_embedding_.value.size()));
}

TinyTransformerBackend::Bound TinyTransformerBackend::Bind(nn::Tape& tape,
                                                           bool trainable) {
  if (!trainable) return BindFrozen(tape);
  auto leaf = [&tape](nn::Parameter& p) { return tape.Leaf(&p); };
  Bound b;
  b.token_embedding = leaf(token_embedding_);
  b.position_embedding = leaf(position_embedding_);
  for (Layer& l : layers_) {
    b.layers.push_back({leaf(l.ln1_gain), leaf(l.ln1_bias), leaf(l.query),
                        leaf(l.key), leaf(l.value), leaf(l.output),
                        leaf(l.ln2_gain), leaf(l.ln2_bias), leaf(l.ffn_in),
                        leaf(l.ffn_in_bias), leaf(l.ffn_out),
                        leaf(l.ffn_out_bias)});
  }
  b.final_gain = leaf(final_gain_);
  b.final_bias = leaf(final_bias_);
  b.output_bias = leaf(output_bias_);
  return b;
}

TinyTransformerBackend::Bound TinyTransformerBackend::BindFrozen(
    nn::Tape& tape) const {
  auto ref = [&tape](const nn::Parameter& p) {
    return tape.ConstantRef(p.value);
  };
  Bound b;
  b.token_embedding = ref(token_embedding_);
  b.position_embedding = ref(position_embedding_);
  for (const Layer& l : layers_) {
    b.layers.push_back({ref(l.ln1_gain), ref(l.ln1_bias), ref(l.query),
                        ref(l.key), ref(l.value), ref(l.output),
                        ref(l.ln2_gain), ref(l.ln2_bias), ref(l.ffn_in),
                        ref(l.ffn_in_bias), ref(l.ffn_out),
                        ref(l.ffn_out_bias)});
  }
  b.final_gain = ref(final_gain_);
  b.final_bias = ref(final_bias_);
  b.output_bias = ref(output_bias_);
  return b;
}

nn::Var TinyTransformerBackend::EmbedTokens(
    nn::Tape& tape, const Bound& bound,
    std::span<const TokenId> tokens) const {
  return tape.GatherRows(bound.token_embedding, ToRows(tokens));
}

nn::Var TinyTransformerBackend::Encode(nn::Tape& tape, const Bound& bound,
                                       nn::Var embedded, int offset) const {
  const int n = static_cast<int>(tape.value(embedded).rows());
  if (offset + n > tape.value(bound.position_embedding).rows()) {
    throw Error(fmt::format("sequence of {} positions at offset {} exceeds "
                            "the position table",
                            n, offset));
  }
  const bool causal = options_.architecture == ArchitectureKind::kDecoderCausal;
  const double scale = 1.0 / std::sqrt(static_cast<double>(options_.dim));
  nn::Var x = tape.Add(
      embedded, tape.GatherRows(bound.position_embedding, Range(offset, offset + n)));
  for (const Bound::LayerVars& l : bound.layers) {
    nn::Var h = tape.LayerNorm(x, l.ln1_gain, l.ln1_bias);
    nn::Var q = tape.MatMul(h, l.query);
    nn::Var k = tape.MatMul(h, l.key);
    nn::Var v = tape.MatMul(h, l.value);
    nn::Var attn =
        tape.SoftmaxRows(tape.Scale(tape.MatMulTransposed(q, k), scale), causal);
    x = tape.Add(x, tape.MatMul(tape.MatMul(attn, v), l.output));
    nn::Var h2 = tape.LayerNorm(x, l.ln2_gain, l.ln2_bias);
    nn::Var inner =
        tape.Relu(tape.AddRowBroadcast(tape.MatMul(h2, l.ffn_in), l.ffn_in_bias));
    x = tape.Add(x, tape.AddRowBroadcast(tape.MatMul(inner, l.ffn_out),
                                         l.ffn_out_bias));
  }
  return tape.LayerNorm(x, bound.final_gain, bound.final_bias);
}

nn::Var TinyTransformerBackend::Logits(nn::Tape& tape, const Bound& bound,
                                       nn::Var hidden_rows) const {
  return tape.AddRowBroadcast(
      tape.MatMulTransposed(hidden_rows, bound.token_embedding),
      bound.output_bias);
}

nn::Matrix TinyTransformerBackend::EmbedPrompt(
    const AssembledPrompt& prompt) const {
  if (prompt.prompt == nullptr ||
      prompt.prompt->value.rows() != 2 * kPromptLength ||
      prompt.prompt->value.cols() != options_.dim) {
    throw Error("prompt parameter has the wrong shape");
  }
  const bool masked = options_.architecture == ArchitectureKind::kEncoderMasked;
  const auto& P = prompt.prompt->value;
  const auto& E = token_embedding_.value;
  nn::Matrix out(static_cast<Eigen::Index>(2 * kPromptLength +
                                           prompt.head_tokens.size() +
                                           (masked ? 2 : 0)),
                 options_.dim);
  Eigen::Index r = 0;
  if (masked) out.row(r++) = E.row(Tokenizer::kCls);
  for (int i = 0; i < kPromptLength; ++i) out.row(r++) = P.row(i);
  for (TokenId t : prompt.head_tokens) out.row(r++) = E.row(t);
  for (int i = kPromptLength; i < 2 * kPromptLength; ++i) out.row(r++) = P.row(i);
  if (masked) out.row(r++) = E.row(Tokenizer::kMask);
  return out;
}

std::unique_ptr<TailPass> TinyTransformerBackend::ForwardTail(
    const AssembledPrompt& prompt) const {
  if (prompt.prompt == nullptr ||
      prompt.prompt->value.rows() != 2 * kPromptLength ||
      prompt.prompt->value.cols() != options_.dim) {
    throw Error("prompt parameter has the wrong shape");
  }
  const bool masked = options_.architecture == ArchitectureKind::kEncoderMasked;
  const std::size_t length =
      2 * kPromptLength + prompt.head_tokens.size() + (masked ? 2 : 0);
  if (length > context_length()) {
    throw Error(fmt::format("prompt of {} positions exceeds context length {}",
                            length, context_length()));
  }
  auto tape = std::make_unique<nn::Tape>();
  Bound b = BindFrozen(*tape);
  nn::Var p = tape->Leaf(prompt.prompt);
  std::vector<nn::Var> parts;
  if (masked) parts.push_back(tape->GatherRows(b.token_embedding, {Tokenizer::kCls}));
  parts.push_back(tape->GatherRows(p, Range(0, kPromptLength)));
  parts.push_back(EmbedTokens(*tape, b, prompt.head_tokens));
  parts.push_back(tape->GatherRows(p, Range(kPromptLength, 2 * kPromptLength)));
  if (masked) parts.push_back(tape->GatherRows(b.token_embedding, {Tokenizer::kMask}));
  nn::Var hidden = Encode(*tape, b, tape->ConcatRows(parts), 0);
  nn::Var last = tape->GatherRows(hidden, {static_cast<int>(length) - 1});
  nn::Var logits = Logits(*tape, b, last);
  return std::make_unique<TinyTailPass>(std::move(tape), logits);
}

std::vector<TokenId> TinyTransformerBackend::CrossEncoderInput(
    std::string_view query, std::string_view document) const {
  const bool masked = options_.architecture == ArchitectureKind::kEncoderMasked;
  std::vector<TokenId> q = tokenizer_.Encode(query);
  std::vector<TokenId> d = tokenizer_.Encode(document);
  const std::size_t fixed = q.size() + 2 + (masked ? 1 : 0);
  if (fixed + d.size() > context_length()) {
    if (!options_.truncate_documents || fixed >= context_length()) {
      throw Error(fmt::format(
          "cross-encoder input of {} tokens exceeds context length {}",
          fixed + d.size(), context_length()));
    }
    d.resize(context_length() - fixed);
  }
  std::vector<TokenId> seq;
  if (masked) seq.push_back(Tokenizer::kCls);
  seq.insert(seq.end(), q.begin(), q.end());
  seq.push_back(Tokenizer::kSep);
  seq.insert(seq.end(), d.begin(), d.end());
  seq.push_back(Tokenizer::kSep);
  return seq;
}

std::size_t TinyTransformerBackend::PooledPosition(
    std::size_t sequence_length) const {
  return options_.architecture == ArchitectureKind::kEncoderMasked
             ? 0
             : sequence_length - 1;
}

nn::Matrix TinyTransformerBackend::HiddenStates(
    std::span<const TokenId> tokens) const {
  nn::Tape tape;
  Bound b = BindFrozen(tape);
  return tape.value(Encode(tape, b, EmbedTokens(tape, b, tokens), 0));
}

std::unique_ptr<ScorePass> TinyTransformerBackend::ForwardScores(
    ScoringHead& head, std::string_view query,
    std::span<const Document* const> documents) {
  if (head.dim() != embedding_dim()) {
    throw Error("scoring head width does not match the backend");
  }
  if (documents.empty()) throw Error("no documents to score");
  auto tape = std::make_unique<nn::Tape>();
  Bound b = Bind(*tape, true);
  nn::Var w = tape->Leaf(&head.weight());
  nn::Var bias = tape->Leaf(&head.bias());
  std::vector<nn::Var> pooled;
  pooled.reserve(documents.size());
  for (const Document* doc : documents) {
    const std::vector<TokenId> seq = CrossEncoderInput(query, doc->text);
    nn::Var hidden = Encode(*tape, b, EmbedTokens(*tape, b, seq), 0);
    pooled.push_back(tape->GatherRows(
        hidden, {static_cast<int>(PooledPosition(seq.size()))}));
  }
  nn::Var rows = tape->ConcatRows(pooled);
  nn::Var scores = tape->AddRowBroadcast(tape->MatMulTransposed(rows, w), bias);
  return std::make_unique<TinyScorePass>(std::move(tape), scores);
}

double TinyTransformerBackend::PretrainEpoch(
    const std::vector<std::vector<TokenId>>& sentences,
    const std::vector<std::size_t>& tail_positions, nn::AdamW& optimizer,
    const nn::PolynomialDecaySchedule& schedule, long& step, Rng& rng) {
  const bool masked = options_.architecture == ArchitectureKind::kEncoderMasked;
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  Shuffle(order, rng);
  const std::size_t batch = static_cast<std::size_t>(options_.pretrain_batch);
  double total_loss = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    const double weight = 1.0 / static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      std::vector<TokenId> input = sentences[order[i]];
      std::vector<std::pair<int, TokenId>> targets;  // (row, token)
      if (masked) {
        input.insert(input.begin(), Tokenizer::kCls);
        std::size_t pos = tail_positions[order[i]] + 1;
        if (UniformIndex(rng, 2) == 1) pos = 1 + UniformIndex(rng, input.size() - 1);
        targets.emplace_back(static_cast<int>(pos), input[pos]);
        input[pos] = Tokenizer::kMask;
      } else {
        for (std::size_t p = 0; p + 1 < input.size(); ++p) {
          targets.emplace_back(static_cast<int>(p), input[p + 1]);
        }
      }
      const int offset = static_cast<int>(
          UniformIndex(rng, static_cast<std::size_t>(options_.max_position_offset) + 1));
      nn::Tape tape;
      Bound b = Bind(tape, true);
      nn::Var hidden = Encode(tape, b, EmbedTokens(tape, b, input), offset);
      std::vector<int> rows;
      for (const auto& t : targets) rows.push_back(t.first);
      nn::Var logits = Logits(tape, b, tape.GatherRows(hidden, rows));
      const nn::Matrix& lv = tape.value(logits);
      nn::Matrix grad(lv.rows(), lv.cols());
      double loss = 0.0;
      for (Eigen::Index r = 0; r < lv.rows(); ++r) {
        auto ce = nn::SoftmaxCrossEntropy(
            std::span<const double>(lv.row(r).data(), lv.cols()),
            targets[r].second);
        loss += ce.loss;
        for (Eigen::Index c = 0; c < lv.cols(); ++c) {
          grad(r, c) = ce.grad[c] * weight / static_cast<double>(lv.rows());
        }
      }
      total_loss += loss / static_cast<double>(lv.rows());
      tape.Backward(logits, grad);
    }
    optimizer.Step(schedule.LearningRate(step++));
  }
  return total_loss / static_cast<double>(std::max<std::size_t>(1, sentences.size()));
}

std::unique_ptr<TinyTransformerBackend> TinyTransformerBackend::Pretrain(
    std::string id, const TinyTransformerOptions& options,
    const FactSet& corpus, const TemplatePack& templates,
    PretrainReport* report) {
  templates.RequireCoverage(corpus);
  std::vector<std::string> words;
  for (const Fact& f : corpus.facts()) {
    words.push_back(f.head);
    words.push_back(f.tail);
  }
  for (std::string& w : templates.Vocabulary()) words.push_back(std::move(w));
  auto model = std::make_unique<TinyTransformerBackend>(
      std::move(id), options, Tokenizer(words));

  // The seen subset is a seeded draw per fact, so it is stable under
  // reordering of the corpus.
  std::vector<std::vector<TokenId>> sentences;
  std::vector<std::size_t> tail_positions;
  std::size_t seen = 0;
  for (const Fact& f : corpus.facts()) {
    const double draw = UnitInterval(
        SeedHasher().Add("tiny-seen").Add(options.seed).Add(f.uid).Finish());
    if (draw >= options.pretrain_fraction) continue;
    ++seen;
    for (const Template& t : templates.ForRelation(f.relation)) {
      Sentence s = RenderSentence(model->tokenizer_, t, f);
      if (s.tokens.size() + (options.architecture ==
                                     ArchitectureKind::kEncoderMasked
                                 ? 1
                                 : 0) >
          static_cast<std::size_t>(options.context_length)) {
        throw Error("pretraining sentence exceeds the context length");
      }
      sentences.push_back(std::move(s.tokens));
      tail_positions.push_back(s.tail_position);
    }
  }
  if (sentences.empty()) throw Error("empty pretraining corpus");

  const long steps_per_epoch = static_cast<long>(
      (sentences.size() + options.pretrain_batch - 1) / options.pretrain_batch);
  const long total = steps_per_epoch * options.pretrain_epochs;
  nn::AdamW optimizer(model->AllParameters(), nn::AdamWOptions{});
  nn::PolynomialDecaySchedule schedule(options.pretrain_lr, total,
                                       nn::WarmupSteps(total, 0.06));
  Rng rng(SeedHasher().Add("tiny-pretrain").Add(options.seed).Finish());
  long step = 0;
  PretrainReport local;
  local.sentences = sentences.size();
  local.seen_facts = seen;
  for (int epoch = 0; epoch < options.pretrain_epochs; ++epoch) {
    const double loss = model->PretrainEpoch(sentences, tail_positions,
                                             optimizer, schedule, step, rng);
    if (!std::isfinite(loss)) {
      throw Error(fmt::format("pretraining diverged at epoch {}", epoch));
    }
    local.epoch_loss.push_back(loss);
    spdlog::debug("{} pretrain epoch {} loss {:.4f}", model->id(), epoch, loss);
  }
  if (report != nullptr) *report = std::move(local);
  return model;
}

std::unique_ptr<ModelBackend> TinyTransformerBackend::Clone() const {
  return std::make_unique<TinyTransformerBackend>(*this);
}

json TinyTransformerBackend::Manifest() const {
  return json{{"id", id_},
              {"type", std::string(type())},
              {"architecture_kind", ArchitectureName(options_.architecture)},
              {"parameter_count", ParameterCount()},
              {"options", options_.ToJson()},
              {"vocab", tokenizer_.ToJson()}};
}

void TinyTransformerBackend::Save(const std::filesystem::path& dir) const {
  std::string blob(kParamsMagic, sizeof(kParamsMagic));
  auto put = [&blob](const void* data, std::size_t n) {
    blob.append(static_cast<const char*>(data), n);
  };
  for (const nn::Parameter* p : AllParameters()) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(p->name.size());
    const std::int64_t rows = p->value.rows(), cols = p->value.cols();
    put(&name_len, sizeof(name_len));
    put(p->name.data(), p->name.size());
    put(&rows, sizeof(rows));
    put(&cols, sizeof(cols));
    put(p->value.data(), sizeof(double) * p->size());
  }
  std::filesystem::create_directories(dir);
  WriteFile(dir / "params.bin", blob);
  WriteJson(dir / "manifest.json", Manifest());
}

std::unique_ptr<TinyTransformerBackend> TinyTransformerBackend::Load(
    const std::filesystem::path& dir) {
  const json manifest = ReadJson(dir / "manifest.json");
  const ArchitectureKind kind =
      ParseArchitecture(manifest.at("architecture_kind").get<std::string>());
  auto model = std::make_unique<TinyTransformerBackend>(
      manifest.at("id").get<std::string>(),
      TinyTransformerOptions::FromJson(manifest.at("options"), kind),
      Tokenizer::FromJson(manifest.at("vocab")));
  const std::string blob = ReadFile(dir / "params.bin");
  std::size_t pos = 0;
  auto take = [&](void* out, std::size_t n) {
    if (pos + n > blob.size()) throw Error("truncated params.bin");
    std::memcpy(out, blob.data() + pos, n);
    pos += n;
  };
  char magic[sizeof(kParamsMagic)];
  take(magic, sizeof(magic));
  if (std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0) {
    throw Error("params.bin: bad magic");
  }
  for (nn::Parameter* p : model->AllParameters()) {
    std::uint32_t name_len = 0;
    take(&name_len, sizeof(name_len));
    std::string name(name_len, '\0');
    take(name.data(), name_len);
    std::int64_t rows = 0, cols = 0;
    take(&rows, sizeof(rows));
    take(&cols, sizeof(cols));
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw Error(fmt::format("params.bin: unexpected tensor {} ({}x{})", name,
                              rows, cols));
    }
    take(p->value.data(), sizeof(double) * p->size());
  }
  if (pos != blob.size()) throw Error("params.bin: trailing bytes");
  return model;
}

}  // namespace xteval
