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

#include "xteval/trainer.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "xteval/evaluator.h"

namespace xteval {
namespace {

std::vector<nn::Matrix> Snapshot(const std::vector<nn::Parameter*>& params) {
  std::vector<nn::Matrix> values;
  values.reserve(params.size());
  for (const nn::Parameter* p : params) values.push_back(p->value);
  return values;
}

void Restore(const std::vector<nn::Parameter*>& params,
             const std::vector<nn::Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->value = values[i];
    params[i]->ZeroGrad();
  }
}

}  // namespace

json FinetuneConfig::ToJson() const {
  return json{{"learning_rate", learning_rate},
              {"weight_decay", weight_decay},
              {"batch_size", batch_size},
              {"warmup_fraction", warmup_fraction},
              {"epochs", epochs},
              {"validation_fraction", validation_fraction},
              {"optimizer", "adamw"},
              {"schedule", "polynomial"}};
}

FinetuneConfig FinetuneConfig::FromJson(const json& j) {
  FinetuneConfig c;
  StrictObject obj(j, "finetune");
  c.learning_rate = obj.Get("learning_rate", c.learning_rate);
  c.weight_decay = obj.Get("weight_decay", c.weight_decay);
  c.batch_size = obj.Get("batch_size", c.batch_size);
  c.warmup_fraction = obj.Get("warmup_fraction", c.warmup_fraction);
  c.epochs = obj.Get("epochs", c.epochs);
  c.validation_fraction =
      obj.Get("validation_fraction", c.validation_fraction);
  if (obj.Has("optimizer") &&
      obj.Required<std::string>("optimizer") != "adamw") {
    throw Error("finetune: only the adamw optimizer is available");
  }
  if (obj.Has("schedule") &&
      obj.Required<std::string>("schedule") != "polynomial") {
    throw Error("finetune: only the polynomial schedule is available");
  }
  obj.Finish();
  if (c.learning_rate <= 0.0 || c.weight_decay < 0.0 || c.batch_size < 1 ||
      c.epochs < 0 || c.warmup_fraction < 0.0 || c.warmup_fraction > 1.0 ||
      c.validation_fraction <= 0.0 || c.validation_fraction >= 1.0) {
    throw Error("finetune config out of range");
  }
  return c;
}

InfoNceResult InfoNce(std::span<const double> scores) {
  if (scores.size() < 2) throw Error("InfoNCE needs at least one negative");
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error("InfoNCE: non-finite score");
  }
  const double shift = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  InfoNceResult r;
  r.grad.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    r.grad[i] = std::exp(scores[i] - shift);
    total += r.grad[i];
  }
  for (double& g : r.grad) g /= total;
  r.loss = std::max(0.0, std::log(total) - (scores[0] - shift));
  r.grad[0] -= 1.0;
  return r;
}

double InfoNceLoss(std::span<const double> scores) {
  return InfoNce(scores).loss;
}

std::uint64_t ScoringHeadSeed(std::uint64_t finetune_seed) {
  return SeedHasher().Add("head").Add(finetune_seed).Finish();
}

FinetunedModel Finetune(std::unique_ptr<ModelBackend> backend,
                        ScoringHead head, const TrainingData& data,
                        const FinetuneConfig& cfg, std::uint64_t seed) {
  if (data.task == nullptr || data.pack == nullptr) {
    throw Error("finetune: missing task or templates");
  }
  const TaskBundle& task = *data.task;
  if (backend->differentiable()) {
    const FinetuneConfig defaults;
    if (cfg.learning_rate != defaults.learning_rate ||
        cfg.weight_decay != defaults.weight_decay) {
      spdlog::warn(
          "finetuning {} with lr {} and weight decay {}; the defaults ({}, {}) "
          "keep the learning rate low and skip weight decay to limit "
          "forgetting",
          backend->id(), cfg.learning_rate, cfg.weight_decay,
          defaults.learning_rate, defaults.weight_decay);
    }
  }

  const Holdout holdout = StratifiedHoldout(
      task.train_facts, cfg.validation_fraction,
      SeedHasher().Add("validation").Add(seed).Finish(), true);
  if (holdout.held.empty()) throw Error("finetune: empty validation set");
  std::vector<RetrievalInstance> validation;
  for (const RetrievalInstance& inst : task.train) {
    if (holdout.held.Contains(inst.fact_uid)) validation.push_back(inst);
  }
  if (validation.size() != holdout.held.size()) {
    throw Error("finetune: task instances do not cover the training facts");
  }

  FinetunedModel model{std::move(backend), std::move(head), 0, 0.0, {}, 0};
  model.validation_instances = validation.size();
  ModelBackend& net = *model.backend;
  {
    const double acc = EvaluateRetrieval(net, model.head, validation).accuracy;
    model.trace.push_back(
        {0, std::numeric_limits<double>::quiet_NaN(), acc});
    model.best_validation_accuracy = acc;
  }
  if (!net.differentiable() || cfg.epochs == 0) return model;

  std::vector<nn::Parameter*> params = net.Parameters(ParameterGroup::kFullModel);
  for (nn::Parameter* p : model.head.Parameters()) params.push_back(p);
  for (nn::Parameter* p : params) p->ZeroGrad();
  std::vector<nn::Matrix> best = Snapshot(params);

  const DocumentGenerator gen = TrainingGenerator(task, *data.pack);
  const std::vector<Fact>& facts = holdout.kept.facts();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const long steps_per_epoch =
      static_cast<long>((facts.size() + batch - 1) / batch);
  const long total = steps_per_epoch * cfg.epochs;
  nn::AdamW optimizer(params,
                      nn::AdamWOptions{.weight_decay = cfg.weight_decay});
  nn::PolynomialDecaySchedule schedule(
      cfg.learning_rate, total, nn::WarmupSteps(total, cfg.warmup_fraction));
  Rng order_rng(SeedHasher().Add("finetune-order").Add(seed).Finish());
  std::vector<std::size_t> order(facts.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Shuffle(order, order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double weight = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const RetrievalInstance inst = BuildTrainInstance(
            facts[order[i]], task.cfg, gen, task.base_seed, epoch - 1);
        std::vector<const Document*> docs = {&inst.gold};
        for (const Document& d : inst.negatives) docs.push_back(&d);
        auto pass = net.ForwardScores(model.head, inst.query, docs);
        InfoNceResult r;
        try {
          r = InfoNce(pass->scores());
        } catch (const Error&) {
          throw Error(fmt::format(
              "finetune diverged: non-finite scores at epoch {} step {} "
              "(fact {}, lr {})",
              epoch, step, inst.fact_uid, schedule.LearningRate(step)));
        }
        loss_sum += r.loss;
        for (double& g : r.grad) g *= weight;
        pass->Backward(r.grad);
      }
      optimizer.Step(schedule.LearningRate(step++));
    }
    const double train_loss = loss_sum / static_cast<double>(facts.size());
    if (!std::isfinite(train_loss)) {
      throw Error(fmt::format("finetune diverged: loss {} at epoch {}",
                              train_loss, epoch));
    }
    const double acc = EvaluateRetrieval(net, model.head, validation).accuracy;
    model.trace.push_back({epoch, train_loss, acc});
    spdlog::debug("{} epoch {} loss {:.4f} validation top-1 {:.3f}", net.id(),
                  epoch, train_loss, acc);
    if (acc > model.best_validation_accuracy) {
      model.best_validation_accuracy = acc;
      model.best_epoch = epoch;
      best = Snapshot(params);
    }
  }
  Restore(params, best);
  return model;
}

}  // namespace xteval
