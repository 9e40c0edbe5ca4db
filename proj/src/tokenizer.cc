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

#include "xteval/tokenizer.h"

#include <cctype>

namespace xteval {
namespace {

constexpr std::string_view kPunctuation = ".,;:?!()";
const char* const kSpecialPieces[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]",
                                      "[MASK]"};

}  // namespace

Tokenizer::Tokenizer(const std::vector<std::string>& words) {
  auto add = [this](const std::string& piece) {
    if (index_.contains(piece)) return;
    index_.emplace(piece, static_cast<TokenId>(pieces_.size()));
    pieces_.push_back(piece);
  };
  for (const char* special : kSpecialPieces) add(special);
  for (const std::string& w : words) {
    for (const std::string& piece : Split(w)) add(piece);
  }
}

std::vector<std::string> Tokenizer::Split(std::string_view text) {
  std::vector<std::string> pieces;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) pieces.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (kPunctuation.find(c) != std::string_view::npos) {
      flush();
      pieces.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
  }
  flush();
  return pieces;
}

TokenId Tokenizer::Lookup(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? kUnk : it->second;
}

bool Tokenizer::Contains(std::string_view piece) const {
  return index_.contains(std::string(piece));
}

std::vector<TokenId> Tokenizer::Encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const std::string& piece : Split(text)) ids.push_back(Lookup(piece));
  return ids;
}

json Tokenizer::ToJson() const {
  return json(std::vector<std::string>(pieces_.begin() + kNumSpecial,
                                       pieces_.end()));
}

Tokenizer Tokenizer::FromJson(const json& j) {
  return Tokenizer(j.get<std::vector<std::string>>());
}

}  // namespace xteval
