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

#include "xteval/registry.h"

#include <algorithm>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "xteval/oracle_backend.h"
#include "xteval/tiny_transformer.h"

namespace xteval {

json BackendSpec::ToJson() const {
  return json{{"id", id}, {"type", type}, {"options", options}};
}

BackendSpec BackendSpec::FromJson(const json& j) {
  StrictObject obj(j, "backend");
  BackendSpec spec;
  spec.id = obj.Required<std::string>("id");
  spec.type = obj.Get<std::string>("type", "");
  spec.options = obj.Get<json>("options", json::object());
  obj.Finish();
  if (spec.id.empty()) throw Error("backend id must not be empty");
  if (spec.type.empty()) {
    if (!IsBuiltinBackend(spec.id)) {
      throw Error("backend '" + spec.id + "' needs a type");
    }
    spec.type = BuiltinBackendSpec(spec.id).type;
  }
  const auto types = BackendTypes();
  if (std::find(types.begin(), types.end(), spec.type) == types.end()) {
    throw Error("unknown backend type '" + spec.type + "'");
  }
  if (!spec.options.is_object()) {
    throw Error("backend '" + spec.id + "': options must be an object");
  }
  return spec;
}

std::vector<std::string> BackendTypes() {
  return {"oracle", "tiny-mlm", "tiny-causal"};
}

bool IsBuiltinBackend(std::string_view id) {
  const auto types = BackendTypes();
  return std::find(types.begin(), types.end(), id) != types.end();
}

BackendSpec BuiltinBackendSpec(std::string_view id) {
  if (!IsBuiltinBackend(id)) {
    throw Error(fmt::format("unknown backend id '{}'", id));
  }
  return BackendSpec{std::string(id), std::string(id), json::object()};
}

BackendSpec ResolveBackend(std::string_view id,
                           const std::vector<BackendSpec>& declared) {
  for (const BackendSpec& spec : declared) {
    if (spec.id == id) return spec;
  }
  return BuiltinBackendSpec(id);
}

std::unique_ptr<ModelBackend> CreateBackend(const BackendSpec& spec,
                                            const FactSet& corpus,
                                            const TemplatePack& templates) {
  if (spec.type == "oracle") {
    return std::make_unique<OracleBackend>(
        spec.id, OracleOptions::FromJson(spec.options), corpus);
  }
  if (spec.type == "tiny-mlm" || spec.type == "tiny-causal") {
    const ArchitectureKind kind = spec.type == "tiny-mlm"
                                      ? ArchitectureKind::kEncoderMasked
                                      : ArchitectureKind::kDecoderCausal;
    TinyTransformerOptions options =
        TinyTransformerOptions::FromJson(spec.options, kind);
    if (options.architecture != kind) {
      throw Error("backend '" + spec.id + "': architecture contradicts type");
    }
    PretrainReport report;
    auto model = TinyTransformerBackend::Pretrain(spec.id, options, corpus,
                                                  templates, &report);
    spdlog::info("pretrained {} on {} sentences ({} facts), final loss {:.4f}",
                 spec.id, report.sentences, report.seen_facts,
                 report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back());
    return model;
  }
  throw Error("unknown backend type '" + spec.type + "'");
}

std::unique_ptr<ModelBackend> LoadBackend(const std::filesystem::path& dir) {
  const json manifest = ReadJson(dir / "manifest.json");
  const std::string type = manifest.at("type").get<std::string>();
  if (type == "oracle") return OracleBackend::Load(dir);
  if (type == "tiny-mlm" || type == "tiny-causal") {
    return TinyTransformerBackend::Load(dir);
  }
  throw Error("cannot load backend of type '" + type + "'");
}

std::string BackendKey(const BackendSpec& spec, const FactSet& corpus,
                       const TemplatePack& templates) {
  std::string material = spec.ToJson().dump();
  for (const Fact& f : corpus.facts()) {
    material += '\n';
    material += f.uid;
  }
  material += '\n' + templates.version() + '\n' + std::string(kCodeVersion);
  return Sha256Hex(material);
}

std::unique_ptr<ModelBackend> PrepareBackend(const BackendSpec& spec,
                                             const FactSet& corpus,
                                             const TemplatePack& templates,
                                             const std::filesystem::path& dir) {
  const std::string key = BackendKey(spec, corpus, templates);
  const auto key_file = dir / "key.txt";
  if (std::filesystem::exists(key_file) && ReadFile(key_file) == key) {
    try {
      return LoadBackend(dir);
    } catch (const Error& e) {
      spdlog::warn("cached backend {} unreadable ({}); rebuilding", spec.id,
                   e.what());
    }
  }
  auto backend = CreateBackend(spec, corpus, templates);
  std::filesystem::create_directories(dir);
  backend->Save(dir);
  WriteFile(key_file, key);
  return backend;
}

}  // namespace xteval
