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

#include <gtest/gtest.h>

#include "testing.h"
#include "xteval/extractor.h"
#include "xteval/registry.h"

namespace xteval {
namespace {

TinyTransformerOptions Small(ArchitectureKind kind) {
  TinyTransformerOptions o;
  o.architecture = kind;
  o.dim = 8;
  o.ffn_dim = 12;
  o.layers = 2;
  o.context_length = 16;
  o.seed = 3;
  return o;
}

TinyTransformerBackend Fresh(ArchitectureKind kind) {
  return TinyTransformerBackend(
      "t", Small(kind), Tokenizer({"a", "b", "c", "d", "e", "f"}));
}

class TinyKindTest : public ::testing::TestWithParam<ArchitectureKind> {};

TEST_P(TinyKindTest, ScoreGradientMatchesFiniteDifferences) {
  TinyTransformerBackend model = Fresh(GetParam());
  ScoringHead head(8, 1);
  const Document doc{"c d e", DocType::kGold, "u", 0, {}};
  const Document* docs[] = {&doc};
  auto score = [&] {
    return model.ForwardScores(head, "a b", docs)->scores()[0];
  };
  std::vector<nn::Parameter*> params =
      model.Parameters(ParameterGroup::kFullModel);
  for (nn::Parameter* p : head.Parameters()) params.push_back(p);
  for (nn::Parameter* p : params) p->ZeroGrad();
  const std::vector<double> one = {1.0};
  model.ForwardScores(head, "a b", docs)->Backward(one);
  int checked = 0;
  for (nn::Parameter* p : params) {
    // A few entries per tensor keep the test quick.
    for (Eigen::Index i = 0; i < p->value.size(); i += 7) {
      const double saved = p->value.data()[i];
      const double h = 1e-5;
      p->value.data()[i] = saved + h;
      const double up = score();
      p->value.data()[i] = saved - h;
      const double down = score();
      p->value.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      EXPECT_NEAR(p->grad.data()[i], numeric,
                  1e-5 * std::max(1.0, std::abs(numeric)))
          << p->name << "[" << i << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST_P(TinyKindTest, TailGradientReachesThePrompt) {
  TinyTransformerBackend model = Fresh(GetParam());
  Rng rng(2);
  nn::Parameter prompt("prompt", nn::RandomNormal(2 * kPromptLength, 8, 0.5, rng));
  AssembledPrompt ap{"r", "u", model.tokenizer().Encode("a b"), &prompt};
  const TokenId target = 3;
  auto logit = [&] { return model.ForwardTail(ap)->logits()[target]; };
  prompt.ZeroGrad();
  auto pass = model.ForwardTail(ap);
  std::vector<double> g(pass->logits().size(), 0.0);
  g[target] = 1.0;
  pass->Backward(g);
  for (Eigen::Index i = 0; i < prompt.value.size(); ++i) {
    const double saved = prompt.value.data()[i];
    const double h = 1e-5;
    prompt.value.data()[i] = saved + h;
    const double up = logit();
    prompt.value.data()[i] = saved - h;
    const double down = logit();
    prompt.value.data()[i] = saved;
    const double numeric = (up - down) / (2 * h);
    EXPECT_NEAR(prompt.grad.data()[i], numeric,
                1e-5 * std::max(1.0, std::abs(numeric)));
  }
}

TEST_P(TinyKindTest, SaveLoadRoundTrip) {
  TinyTransformerBackend model = Fresh(GetParam());
  const auto dir = testing::TempDir("tiny-save");
  model.Save(dir);
  auto back = LoadBackend(dir);
  const auto& tiny = dynamic_cast<const TinyTransformerBackend&>(*back);
  const auto tokens = model.CrossEncoderInput("a b", "c");
  EXPECT_EQ(tiny.HiddenStates(tokens), model.HiddenStates(tokens));
  EXPECT_EQ(tiny.type(), model.type());
  EXPECT_EQ(tiny.ParameterCount(), model.ParameterCount());
}

INSTANTIATE_TEST_SUITE_P(Kinds, TinyKindTest,
                         ::testing::Values(ArchitectureKind::kEncoderMasked,
                                           ArchitectureKind::kDecoderCausal));

TEST(TinyTransformerTest, PooledPositionFollowsArchitecture) {
  const auto enc = Fresh(ArchitectureKind::kEncoderMasked);
  const auto dec = Fresh(ArchitectureKind::kDecoderCausal);
  EXPECT_EQ(enc.PooledPosition(9), 0u);
  EXPECT_EQ(dec.PooledPosition(9), 8u);

  // Only the last row of the causal decoder sees the whole document.
  const auto x = dec.CrossEncoderInput("a b", "c d");
  const auto y = dec.CrossEncoderInput("a b", "c e");
  ASSERT_EQ(x.size(), y.size());
  const nn::Matrix hx = dec.HiddenStates(x), hy = dec.HiddenStates(y);
  EXPECT_EQ(hx.row(0), hy.row(0));
  EXPECT_NE(hx.row(x.size() - 1), hy.row(y.size() - 1));
  // The encoder's first row reads every token.
  const auto ex = enc.CrossEncoderInput("a b", "c d");
  const auto ey = enc.CrossEncoderInput("a b", "c e");
  EXPECT_NE(enc.HiddenStates(ex).row(0), enc.HiddenStates(ey).row(0));
}

TEST(TinyTransformerTest, OverlongInputs) {
  const auto model = Fresh(ArchitectureKind::kEncoderMasked);
  const std::string doc = "a b c d e f a b c d e f a b c d e f";
  EXPECT_THROW(model.CrossEncoderInput("a", doc), Error);
  TinyTransformerOptions o = Small(ArchitectureKind::kEncoderMasked);
  o.truncate_documents = true;
  TinyTransformerBackend cut("t", o, Tokenizer({"a", "b", "c", "d", "e", "f"}));
  EXPECT_EQ(cut.CrossEncoderInput("a", doc).size(), 16u);
}

TEST(TinyTransformerTest, PretrainingLowersLoss) {
  const SyntheticWorld w = testing::World(60, 2, 30, 5);
  TinyTransformerOptions o = Small(ArchitectureKind::kEncoderMasked);
  o.dim = 16;
  o.ffn_dim = 32;
  o.context_length = 32;
  o.pretrain_epochs = 15;
  PretrainReport report;
  auto model =
      TinyTransformerBackend::Pretrain("t", o, w.facts, w.templates, &report);
  ASSERT_EQ(report.epoch_loss.size(), 15u);
  EXPECT_LT(report.epoch_loss.back(), report.epoch_loss.front());
  // Each fact is kept with probability 0.8.
  EXPECT_GT(report.seen_facts, 36u);
  EXPECT_LT(report.seen_facts, 60u);
  // Every entity is one token.
  for (const Fact& f : w.facts.facts()) {
    EXPECT_TRUE(model->tokenizer().Contains(f.tail));
  }
}

}  // namespace
}  // namespace xteval
