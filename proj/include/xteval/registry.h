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

// Backend registry. A backend is named by an id and built from a type plus
// options; the built-in ids are "oracle", "tiny-mlm" and "tiny-causal".

#ifndef XTEVAL_REGISTRY_H_
#define XTEVAL_REGISTRY_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "xteval/backend.h"
#include "xteval/kb.h"
#include "xteval/templates.h"

namespace xteval {

struct BackendSpec {
  std::string id;
  std::string type;  // oracle | tiny-mlm | tiny-causal
  json options = json::object();

  json ToJson() const;
  static BackendSpec FromJson(const json& j);
};

std::vector<std::string> BackendTypes();
bool IsBuiltinBackend(std::string_view id);
BackendSpec BuiltinBackendSpec(std::string_view id);

// Looks `id` up among `declared`, then among the built-ins.
BackendSpec ResolveBackend(std::string_view id,
                           const std::vector<BackendSpec>& declared);

// `corpus` is the oracle's fact universe and the tiny models' pretraining
// corpus.
std::unique_ptr<ModelBackend> CreateBackend(const BackendSpec& spec,
                                            const FactSet& corpus,
                                            const TemplatePack& templates);

// Reloads a backend written by ModelBackend::Save, dispatching on the
// manifest's "type".
std::unique_ptr<ModelBackend> LoadBackend(const std::filesystem::path& dir);

// Content key of a backend build: spec, corpus uids and template version.
std::string BackendKey(const BackendSpec& spec, const FactSet& corpus,
                       const TemplatePack& templates);

// Loads the backend cached under `dir` when its key matches, otherwise
// builds it and writes it there.
std::unique_ptr<ModelBackend> PrepareBackend(const BackendSpec& spec,
                                             const FactSet& corpus,
                                             const TemplatePack& templates,
                                             const std::filesystem::path& dir);

}  // namespace xteval

#endif  // XTEVAL_REGISTRY_H_
