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

#include "xteval/config.h"

#include <cstdlib>
#include <set>

#include <fmt/format.h>

namespace xteval {
namespace {

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

FactSource ParseSource(const json& j, const std::filesystem::path& base,
                       const std::string& context) {
  FactSource s;
  if (j.is_string()) {
    s.path = Resolve(base, j.get<std::string>());
    return s;
  }
  StrictObject obj(j, context);
  s.path = Resolve(base, obj.Required<std::string>("path"));
  s.format = ParseFactFormat(obj.Get<std::string>("format", "lama_jsonl"));
  obj.Finish();
  return s;
}

std::vector<std::uint64_t> ParseSeeds(StrictObject& obj, std::string_view key,
                                      std::vector<std::uint64_t> fallback) {
  auto seeds = obj.Get(key, fallback);
  if (seeds.empty()) {
    throw Error(fmt::format("seeds.{} must not be empty", key));
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() !=
      seeds.size()) {
    throw Error(fmt::format("seeds.{} has duplicates", key));
  }
  return seeds;
}

}  // namespace

json FactSource::ToJson() const {
  return json{{"path", path.string()}, {"format", FactFormatName(format)}};
}

json ExperimentConfig::ToJson() const {
  json b = json::array();
  for (const BackendSpec& s : backends) b.push_back(s.ToJson());
  json j{{"schema_version", kConfigSchemaVersion},
         {"backends", b},
         {"diagnostic", diagnostic.ToJson()},
         {"templates", templates.string()},
         {"split", {{"kind", SplitKindName(split_kind)}, {"ratio", split_ratio}}},
         {"task", task.ToJson()},
         {"snapshot_fraction", snapshot_fraction},
         {"seeds",
          {{"extraction", extraction_seeds},
           {"split", split_seeds},
           {"finetune", finetune_seeds}}},
         {"output_root", output_root.string()},
         {"extraction", extraction.ToJson()},
         {"finetune", finetune.ToJson()},
         {"workers", workers}};
  if (prompt_train) j["prompt_train"] = prompt_train->ToJson();
  return j;
}

void ExperimentConfig::Validate() const {
  if (backends.empty()) throw Error("config: no backends");
  std::set<std::string> ids;
  for (const BackendSpec& s : backends) {
    if (!ids.insert(s.id).second) {
      throw Error("config: duplicate backend id '" + s.id + "'");
    }
  }
  auto require_file = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::is_regular_file(p)) {
      throw Error(fmt::format("config: {} '{}' does not exist", what,
                              p.string()));
    }
  };
  require_file(diagnostic.path, "diagnostic");
  require_file(templates, "templates");
  if (prompt_train) require_file(prompt_train->path, "prompt_train");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw Error("config: split ratio must lie in (0, 1)");
  }
  if (!(snapshot_fraction > 0.0 && snapshot_fraction <= 1.0)) {
    throw Error("config: snapshot_fraction must lie in (0, 1]");
  }
  if (output_root.empty()) {
    throw Error(fmt::format("config: no output_root and {} is unset",
                            kCacheRootEnv));
  }
  if (workers < 1) throw Error("config: workers must be at least 1");
}

ExperimentConfig ParseConfig(const json& j,
                             const std::filesystem::path& base_dir) {
  StrictObject obj(j, "config");
  const int version = obj.Required<int>("schema_version");
  if (version != kConfigSchemaVersion) {
    throw Error(fmt::format("config: unsupported schema_version {}", version));
  }
  ExperimentConfig c;
  for (const json& b : obj.Raw("backends")) {
    c.backends.push_back(b.is_string()
                             ? BuiltinBackendSpec(b.get<std::string>())
                             : BackendSpec::FromJson(b));
  }
  c.diagnostic = ParseSource(obj.Raw("diagnostic"), base_dir, "diagnostic");
  if (obj.Has("prompt_train")) {
    c.prompt_train =
        ParseSource(obj.Raw("prompt_train"), base_dir, "prompt_train");
  }
  c.templates = Resolve(base_dir, obj.Required<std::string>("templates"));
  if (obj.Has("split")) {
    StrictObject split(obj.Raw("split"), "split");
    c.split_kind = ParseSplitKind(split.Get<std::string>("kind", "iid"));
    c.split_ratio = split.Get("ratio", c.split_ratio);
    split.Finish();
  }
  if (obj.Has("task")) c.task = TaskGenConfig::FromJson(obj.Raw("task"));
  c.snapshot_fraction = obj.Get("snapshot_fraction", c.snapshot_fraction);
  if (obj.Has("seeds")) {
    StrictObject seeds(obj.Raw("seeds"), "seeds");
    c.extraction_seeds = ParseSeeds(seeds, "extraction", c.extraction_seeds);
    c.split_seeds = ParseSeeds(seeds, "split", c.split_seeds);
    c.finetune_seeds = ParseSeeds(seeds, "finetune", c.finetune_seeds);
    seeds.Finish();
  }
  if (obj.Has("output_root")) {
    c.output_root = Resolve(base_dir, obj.Required<std::string>("output_root"));
  } else if (const char* env = std::getenv(kCacheRootEnv);
             env != nullptr && *env != '\0') {
    c.output_root = std::filesystem::path(env);
  }
  if (obj.Has("extraction")) {
    c.extraction = ExtractionConfig::FromJson(obj.Raw("extraction"));
  }
  if (obj.Has("finetune")) {
    c.finetune = FinetuneConfig::FromJson(obj.Raw("finetune"));
  }
  c.workers = obj.Get("workers", c.workers);
  obj.Finish();
  return c;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  const json j = ReadJson(path);
  return ParseConfig(j, std::filesystem::absolute(path).parent_path());
}

}  // namespace xteval
