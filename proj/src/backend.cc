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

#include "xteval/backend.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xteval {

std::string_view ArchitectureName(ArchitectureKind kind) {
  return kind == ArchitectureKind::kEncoderMasked ? "encoder_masked"
                                                  : "decoder_causal";
}

ArchitectureKind ParseArchitecture(std::string_view name) {
  if (name == "encoder_masked") return ArchitectureKind::kEncoderMasked;
  if (name == "decoder_causal") return ArchitectureKind::kDecoderCausal;
  throw Error("unknown architecture '" + std::string(name) + "'");
}

ScoringHead::ScoringHead(std::size_t dim, std::uint64_t seed) : seed_(seed) {
  Rng rng(SeedHasher().Add("scoring-head").Add(seed).Finish());
  const auto d = static_cast<Eigen::Index>(dim);
  weight_ = nn::Parameter(
      "head.weight",
      nn::RandomNormal(1, d, 1.0 / std::sqrt(static_cast<double>(dim)), rng));
  bias_ = nn::Parameter("head.bias", nn::Matrix::Zero(1, 1));
}

json ScoringHead::ToJson() const {
  std::vector<double> w(weight_.value.data(),
                        weight_.value.data() + weight_.value.size());
  return json{{"seed", seed_}, {"weight", w}, {"bias", bias_.value(0, 0)}};
}

ScoringHead ScoringHead::FromJson(const json& j) {
  const auto w = j.at("weight").get<std::vector<double>>();
  ScoringHead head(w.size(), j.at("seed").get<std::uint64_t>());
  for (std::size_t i = 0; i < w.size(); ++i) {
    head.weight_.value(0, static_cast<Eigen::Index>(i)) = w[i];
  }
  head.bias_.value(0, 0) = j.at("bias").get<double>();
  return head;
}

std::vector<std::pair<TokenId, double>> PredictTailDistribution(
    const ModelBackend& backend, const AssembledPrompt& prompt) {
  std::unique_ptr<TailPass> pass = backend.ForwardTail(prompt);
  std::span<const double> logits = pass->logits();
  std::vector<std::pair<TokenId, double>> ranking;
  ranking.reserve(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw Error("backend " + backend.id() + " produced a non-finite logit");
    }
    ranking.emplace_back(static_cast<TokenId>(i), logits[i]);
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return ranking;
}

TokenId TopToken(std::span<const double> logits) {
  if (logits.empty()) throw Error("TopToken: empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

std::vector<double> ScoreCandidates(
    ModelBackend& backend, ScoringHead& head, std::string_view query,
    std::span<const Document* const> documents) {
  std::unique_ptr<ScorePass> pass =
      backend.ForwardScores(head, query, documents);
  std::span<const double> s = pass->scores();
  return {s.begin(), s.end()};
}

double ScorePair(ModelBackend& backend, ScoringHead& head,
                 std::string_view query, const Document& document) {
  const Document* docs[] = {&document};
  return ScoreCandidates(backend, head, query, docs).front();
}

}  // namespace xteval
