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

#ifndef XTEVAL_TOKENIZER_H_
#define XTEVAL_TOKENIZER_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xteval/common.h"

namespace xteval {

using TokenId = std::int32_t;

// Word-level tokenizer over a closed vocabulary. Text is split on
// whitespace and the punctuation marks . , ; : ? ! ( ) are emitted as
// their own pieces. Out-of-vocabulary pieces map to [UNK].
class Tokenizer {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kMask = 4;
  static constexpr int kNumSpecial = 5;

  // Special tokens come first, then `words` deduplicated in order.
  explicit Tokenizer(const std::vector<std::string>& words);

  static std::vector<std::string> Split(std::string_view text);

  std::vector<TokenId> Encode(std::string_view text) const;
  TokenId Lookup(std::string_view piece) const;
  bool Contains(std::string_view piece) const;
  const std::string& Piece(TokenId id) const { return pieces_.at(id); }
  std::size_t vocab_size() const { return pieces_.size(); }
  const std::vector<std::string>& pieces() const { return pieces_; }

  json ToJson() const;
  static Tokenizer FromJson(const json& j);

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace xteval

#endif  // XTEVAL_TOKENIZER_H_
