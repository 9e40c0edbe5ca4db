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

// Experiment configuration (JSON, schema_version 1). Unknown keys are
// errors; relative paths resolve against the config file's directory.

#ifndef XTEVAL_CONFIG_H_
#define XTEVAL_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xteval/extractor.h"
#include "xteval/kb.h"
#include "xteval/registry.h"
#include "xteval/taskforge.h"
#include "xteval/trainer.h"

namespace xteval {

inline constexpr int kConfigSchemaVersion = 1;
// Default output root when the config does not name one.
inline constexpr const char* kCacheRootEnv = "XTEVAL_CACHE_ROOT";

struct FactSource {
  std::filesystem::path path;
  FactFormat format = FactFormat::kLamaJsonl;

  json ToJson() const;
};

struct ExperimentConfig {
  // Backends to run, in order; ids unknown to the registry need a type.
  std::vector<BackendSpec> backends;
  FactSource diagnostic;
  // Facts used to train soft prompts. Defaults to the diagnostic set.
  std::optional<FactSource> prompt_train;
  std::filesystem::path templates;
  SplitKind split_kind = SplitKind::kIid;
  double split_ratio = 0.6;
  TaskGenConfig task;
  double snapshot_fraction = 1.0;
  std::vector<std::uint64_t> extraction_seeds = {0, 1, 2};
  std::vector<std::uint64_t> split_seeds = {0, 1, 2};
  std::vector<std::uint64_t> finetune_seeds = {0, 1, 2};
  std::filesystem::path output_root;
  ExtractionConfig extraction;
  FinetuneConfig finetune;
  int workers = 1;

  // Paths are written as given (absolute after loading).
  json ToJson() const;
  // Checks paths and value ranges before any stage runs.
  void Validate() const;
};

ExperimentConfig ParseConfig(const json& j,
                             const std::filesystem::path& base_dir);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

}  // namespace xteval

#endif  // XTEVAL_CONFIG_H_
