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

#ifndef XTEVAL_COMMON_H_
#define XTEVAL_COMMON_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xteval {

using json = nlohmann::json;
using Rng = std::mt19937_64;

inline constexpr std::string_view kCodeVersion = "xteval 0.3.1";

// All recoverable failures in the library surface as this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trims both ends and collapses internal whitespace runs to one space.
// No case folding.
std::string NormalizeWhitespace(std::string_view text);

std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

// Deterministic seed derivation. Mixing is platform independent (FNV-1a
// over the byte stream followed by a splitmix64 finalizer), so derived seeds
// are stable across compilers and runs.
class SeedHasher {
 public:
  SeedHasher& Add(std::uint64_t value);
  SeedHasher& Add(std::string_view value);
  std::uint64_t Finish() const;

 private:
  std::uint64_t state_ = 14695981039346656037ull;
};

std::uint64_t SplitMix64(std::uint64_t x);

// Maps a 64-bit key to [0, 1).
double UnitInterval(std::uint64_t key);

std::size_t UniformIndex(Rng& rng, std::size_t n);

// Fisher-Yates over UniformIndex, so the permutation only depends on the
// engine output sequence.
template <typename T>
void Shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[UniformIndex(rng, i)]);
  }
}

std::string ReadFile(const std::filesystem::path& path);
// Writes through a temporary sibling and renames into place.
void WriteFile(const std::filesystem::path& path, std::string_view contents);

// Calls `fn(line_number, record)` for every non-blank line. Line numbers
// are 1-based. Parse failures raise Error naming the line.
void ForEachJsonLine(const std::filesystem::path& path,
                     const std::function<void(std::size_t, const json&)>& fn);

void WriteJsonLines(const std::filesystem::path& path,
                    const std::vector<json>& records);

json ReadJson(const std::filesystem::path& path);
void WriteJson(const std::filesystem::path& path, const json& value);

// Reads a JSON object while tracking which keys were consumed; Finish()
// rejects anything left over so config typos fail loudly.
class StrictObject {
 public:
  StrictObject(const json& object, std::string context);

  bool Has(std::string_view key) const;
  const json& Raw(std::string_view key);

  template <typename T>
  T Get(std::string_view key, T fallback) {
    if (!Has(key)) return fallback;
    return Required<T>(key);
  }

  template <typename T>
  T Required(std::string_view key) {
    const json& value = Raw(key);
    try {
      return value.get<T>();
    } catch (const json::exception& e) {
      throw Error(context_ + ": field '" + std::string(key) +
                  "' has the wrong type (" + e.what() + ")");
    }
  }

  void Finish() const;

 private:
  const json& object_;
  std::string context_;
  std::vector<std::string> consumed_;
};

std::string FormatDouble(double value, int precision = 4);

}  // namespace xteval

#endif  // XTEVAL_COMMON_H_
