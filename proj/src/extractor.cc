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

#include "xteval/extractor.h"

#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace xteval {
namespace {

// Reference defaults; anything else is logged once per call.
void WarnOnOverride(const ExtractionConfig& cfg) {
  const ExtractionConfig defaults;
  if (cfg.learning_rate != defaults.learning_rate ||
      cfg.weight_decay != defaults.weight_decay) {
    spdlog::warn(
        "prompt training uses lr {} and weight decay {} instead of the "
        "defaults ({}, {})",
        cfg.learning_rate, cfg.weight_decay, defaults.learning_rate,
        defaults.weight_decay);
  }
}

TokenId GoldToken(const Tokenizer& tok, const Fact& fact) {
  const std::vector<TokenId> ids = tok.Encode(fact.tail);
  if (ids.size() != 1 || ids[0] == Tokenizer::kUnk) return -1;
  return ids[0];
}

double Top1(const ModelBackend& backend, nn::Parameter& prompt,
            const std::vector<const Fact*>& facts) {
  if (facts.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Fact* f : facts) hits += PredictsTail(backend, prompt, *f) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(facts.size());
}

json MatrixToJson(const nn::Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"values", std::vector<double>(m.data(), m.data() + m.size())}};
}

nn::Matrix MatrixFromJson(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw Error("matrix payload has the wrong size");
  }
  nn::Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

}  // namespace

json ExtractionConfig::ToJson() const {
  return json{{"learning_rate", learning_rate},
              {"weight_decay", weight_decay},
              {"batch_size", batch_size},
              {"warmup_fraction", warmup_fraction},
              {"epochs", epochs},
              {"validation_fraction", validation_fraction},
              {"optimizer", "adamw"},
              {"schedule", "polynomial"}};
}

ExtractionConfig ExtractionConfig::FromJson(const json& j) {
  ExtractionConfig c;
  StrictObject obj(j, "extraction");
  c.learning_rate = obj.Get("learning_rate", c.learning_rate);
  c.weight_decay = obj.Get("weight_decay", c.weight_decay);
  c.batch_size = obj.Get("batch_size", c.batch_size);
  c.warmup_fraction = obj.Get("warmup_fraction", c.warmup_fraction);
  c.epochs = obj.Get("epochs", c.epochs);
  c.validation_fraction =
      obj.Get("validation_fraction", c.validation_fraction);
  if (obj.Has("optimizer") &&
      obj.Required<std::string>("optimizer") != "adamw") {
    throw Error("extraction: only the adamw optimizer is available");
  }
  if (obj.Has("schedule") &&
      obj.Required<std::string>("schedule") != "polynomial") {
    throw Error("extraction: only the polynomial schedule is available");
  }
  obj.Finish();
  if (c.learning_rate <= 0.0 || c.weight_decay < 0.0 || c.batch_size < 1 ||
      c.epochs < 0 || c.warmup_fraction < 0.0 || c.warmup_fraction > 1.0 ||
      c.validation_fraction < 0.0 || c.validation_fraction >= 1.0) {
    throw Error("extraction config out of range");
  }
  return c;
}

nn::Parameter& SoftPromptSet::For(std::string_view relation) {
  auto it = prompts.find(std::string(relation));
  if (it == prompts.end()) {
    throw Error(fmt::format("no soft prompt for relation '{}'", relation));
  }
  return it->second;
}

bool SoftPromptSet::Covers(std::string_view relation) const {
  return prompts.contains(std::string(relation));
}

json SoftPromptSet::ToJson() const {
  json p = json::object();
  for (const auto& [relation, param] : prompts) {
    p[relation] = MatrixToJson(param.value);
  }
  return json{{"seed", seed},
              {"prompt_length", kPromptLength},
              {"selection_metric", selection_metric},
              {"relation_metric", relation_metric},
              {"best_epoch", best_epoch},
              {"prompts", p}};
}

SoftPromptSet SoftPromptSet::FromJson(const json& j) {
  SoftPromptSet s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.selection_metric = j.at("selection_metric").get<double>();
  s.relation_metric =
      j.at("relation_metric").get<std::map<std::string, double>>();
  s.best_epoch = j.at("best_epoch").get<std::map<std::string, int>>();
  for (const auto& [relation, m] : j.at("prompts").items()) {
    s.prompts.emplace(relation,
                      nn::Parameter("prompt." + relation, MatrixFromJson(m)));
  }
  return s;
}

AssembledPrompt AssemblePrompt(const ModelBackend& backend,
                               nn::Parameter& prompt, const Fact& fact) {
  AssembledPrompt a;
  a.relation = fact.relation;
  a.fact_uid = fact.uid;
  a.head_tokens = backend.tokenizer().Encode(fact.head);
  a.prompt = &prompt;
  return a;
}

bool PredictsTail(const ModelBackend& backend, nn::Parameter& prompt,
                  const Fact& fact) {
  const TokenId gold = GoldToken(backend.tokenizer(), fact);
  if (gold < 0) return false;
  auto pass = backend.ForwardTail(AssemblePrompt(backend, prompt, fact));
  return TopToken(pass->logits()) == gold;
}

SoftPromptSet TrainSoftPrompts(const ModelBackend& backend,
                               const FactSet& train, const FactSet& val,
                               const ExtractionConfig& cfg,
                               std::uint64_t seed) {
  for (const std::string& r : val.relations()) {
    if (!train.relations().contains(r)) {
      throw Error(fmt::format(
          "relation '{}' has validation facts but no training facts", r));
    }
  }
  if (backend.differentiable()) WarnOnOverride(cfg);
  std::map<std::string, std::vector<const Fact*>> train_by, val_by;
  for (const Fact& f : train.facts()) train_by[f.relation].push_back(&f);
  for (const Fact& f : val.facts()) val_by[f.relation].push_back(&f);

  SoftPromptSet set;
  set.seed = seed;
  const auto dim = static_cast<Eigen::Index>(backend.embedding_dim());
  std::size_t val_hits = 0, val_total = 0;
  for (const auto& [relation, facts] : train_by) {
    Rng init_rng(
        SeedHasher().Add("soft-prompt").Add(seed).Add(relation).Finish());
    nn::Parameter& prompt =
        set.prompts
            .emplace(relation,
                     nn::Parameter("prompt." + relation,
                                   nn::RandomNormal(2 * kPromptLength, dim,
                                                    backend.embedding_rms(),
                                                    init_rng)))
            .first->second;
    // A relation without validation facts selects on its training facts.
    const std::vector<const Fact*>& selection =
        val_by.contains(relation) ? val_by[relation] : facts;
    double best = Top1(backend, prompt, selection);
    int best_epoch = 0;
    if (backend.differentiable() && cfg.epochs > 0) {
      for (const Fact* f : facts) {
        if (GoldToken(backend.tokenizer(), *f) < 0) {
          throw Error(fmt::format("fact {} has no single-token tail", f->uid));
        }
      }
      nn::Matrix best_value = prompt.value;
      const auto batch = static_cast<std::size_t>(cfg.batch_size);
      const long steps_per_epoch =
          static_cast<long>((facts.size() + batch - 1) / batch);
      const long total = steps_per_epoch * cfg.epochs;
      nn::AdamW optimizer({&prompt}, nn::AdamWOptions{.weight_decay =
                                                          cfg.weight_decay});
      nn::PolynomialDecaySchedule schedule(
          cfg.learning_rate, total, nn::WarmupSteps(total, cfg.warmup_fraction));
      Rng order_rng(
          SeedHasher().Add("prompt-order").Add(seed).Add(relation).Finish());
      std::vector<const Fact*> order = facts;
      long step = 0;
      for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Shuffle(order, order_rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
          const std::size_t end = std::min(order.size(), start + batch);
          const double weight = 1.0 / static_cast<double>(end - start);
          for (std::size_t i = start; i < end; ++i) {
            const Fact& f = *order[i];
            auto pass = backend.ForwardTail(AssemblePrompt(backend, prompt, f));
            nn::CrossEntropyResult ce = nn::SoftmaxCrossEntropy(
                pass->logits(), GoldToken(backend.tokenizer(), f));
            if (!std::isfinite(ce.loss)) {
              throw Error(fmt::format(
                  "prompt training for relation '{}' diverged at epoch {}",
                  relation, epoch));
            }
            for (double& g : ce.grad) g *= weight;
            pass->Backward(ce.grad);
          }
          optimizer.Step(schedule.LearningRate(step++));
        }
        const double acc = Top1(backend, prompt, selection);
        if (acc > best) {
          best = acc;
          best_epoch = epoch;
          best_value = prompt.value;
        }
      }
      prompt.value = best_value;
      prompt.ZeroGrad();
    }
    set.relation_metric[relation] = best;
    set.best_epoch[relation] = best_epoch;
    if (val_by.contains(relation)) {
      val_hits += static_cast<std::size_t>(
          std::lround(best * static_cast<double>(val_by[relation].size())));
      val_total += val_by[relation].size();
    }
    spdlog::debug("relation {}: selection top-1 {:.3f} at epoch {}", relation,
                  best, best_epoch);
  }
  set.selection_metric =
      val_total == 0 ? 0.0
                     : static_cast<double>(val_hits) /
                           static_cast<double>(val_total);
  return set;
}

json KnowledgeSnapshot::ManifestJson() const {
  json j{{"backend_id", backend_id},
         {"seed", seed},
         {"extraction_fraction", extraction_fraction},
         {"diagnostic_size", diagnostic_size},
         {"snapshot_size", facts.size()},
         {"dropped_facts", dropped_facts}};
  if (!warning.empty()) j["warning"] = warning;
  return j;
}

KnowledgeSnapshot ExtractKnowledge(const ModelBackend& backend,
                                   SoftPromptSet& prompts,
                                   const FactSet& diagnostic,
                                   std::uint64_t seed) {
  for (const std::string& r : diagnostic.relations()) {
    if (!prompts.Covers(r)) {
      throw Error(fmt::format("soft prompts do not cover relation '{}'", r));
    }
  }
  KnowledgeSnapshot snap;
  snap.backend_id = backend.id();
  snap.seed = seed;
  snap.diagnostic_size = diagnostic.size();
  snap.facts = diagnostic.Filter(
      [&](const Fact& f) {
        return PredictsTail(backend, prompts.For(f.relation), f);
      },
      fmt::format("snapshot:{}:e{}", backend.id(), seed));
  snap.extraction_fraction =
      diagnostic.empty() ? 0.0
                         : static_cast<double>(snap.facts.size()) /
                               static_cast<double>(diagnostic.size());
  return snap;
}

void SaveSnapshot(const KnowledgeSnapshot& snapshot,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SaveFacts(snapshot.facts, dir / "facts.jsonl");
  WriteJson(dir / "snapshot.json", snapshot.ManifestJson());
}

KnowledgeSnapshot LoadSnapshot(const std::filesystem::path& dir) {
  const json m = ReadJson(dir / "snapshot.json");
  KnowledgeSnapshot snap;
  snap.backend_id = m.at("backend_id").get<std::string>();
  snap.seed = m.at("seed").get<std::uint64_t>();
  snap.extraction_fraction = m.at("extraction_fraction").get<double>();
  snap.diagnostic_size = m.at("diagnostic_size").get<std::size_t>();
  snap.dropped_facts = m.at("dropped_facts").get<std::size_t>();
  snap.warning = m.value("warning", "");
  const std::size_t expected = m.at("snapshot_size").get<std::size_t>();
  if (expected == 0) {
    snap.facts = FactSet({}, "snapshot");
  } else {
    snap.facts = LoadFacts(dir / "facts.jsonl", FactFormat::kCanonical);
  }
  if (snap.facts.size() != expected) {
    throw Error("snapshot size does not match its manifest");
  }
  return snap;
}

}  // namespace xteval
