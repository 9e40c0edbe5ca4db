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

#include "xteval/common.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "testing.h"

namespace xteval {
namespace {

TEST(CommonTest, Sha256MatchesStandardVectors) {
  EXPECT_EQ(Sha256Hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CommonTest, NormalizeWhitespace) {
  EXPECT_EQ(NormalizeWhitespace("  a \t b\n c  "), "a b c");
  EXPECT_EQ(NormalizeWhitespace(""), "");
}

TEST(CommonTest, SeedHasherIsOrderSensitiveAndStable) {
  const auto a = SeedHasher().Add("x").Add(1).Finish();
  const auto b = SeedHasher().Add(1).Add("x").Finish();
  EXPECT_NE(a, b);
  EXPECT_EQ(a, SeedHasher().Add("x").Add(1).Finish());
  // String boundaries matter: ("ab", "c") differs from ("a", "bc").
  EXPECT_NE(SeedHasher().Add("ab").Add("c").Finish(),
            SeedHasher().Add("a").Add("bc").Finish());
}

TEST(CommonTest, UnitIntervalStaysInRange) {
  double sum = 0.0;
  for (std::uint64_t k = 0; k < 20000; ++k) {
    const double u = UnitInterval(k);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(CommonTest, UniformIndexCoversRangeEvenly) {
  Rng rng(7);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[UniformIndex(rng, 6)];
  // 4 sigma of a binomial(60000, 1/6) count.
  const double sigma = std::sqrt(n * (1.0 / 6) * (5.0 / 6));
  for (int c : counts) EXPECT_NEAR(c, n / 6.0, 4 * sigma);
}

TEST(CommonTest, ShuffleIsAPermutation) {
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  Rng rng(3);
  auto shuffled = v;
  Shuffle(shuffled, rng);
  EXPECT_NE(shuffled, v);
  std::sort(shuffled.begin(), shuffled.end());
  EXPECT_EQ(shuffled, v);
}

TEST(CommonTest, StrictObjectRejectsUnknownKeys) {
  const json j{{"a", 1}, {"typo", 2}};
  StrictObject obj(j, "cfg");
  EXPECT_EQ(obj.Get("a", 0), 1);
  EXPECT_THROW(obj.Finish(), Error);
}

TEST(CommonTest, StrictObjectReportsWrongTypes) {
  const json j{{"a", "text"}};
  StrictObject obj(j, "cfg");
  EXPECT_THROW(obj.Required<int>("a"), Error);
}

TEST(CommonTest, FileRoundTrip) {
  const auto dir = testing::TempDir("common");
  WriteFile(dir / "sub" / "x.txt", "hello");
  EXPECT_EQ(ReadFile(dir / "sub" / "x.txt"), "hello");
  WriteJsonLines(dir / "l.jsonl", {json{{"a", 1}}, json{{"a", 2}}});
  int total = 0;
  ForEachJsonLine(dir / "l.jsonl",
                  [&](std::size_t, const json& j) { total += j["a"].get<int>(); });
  EXPECT_EQ(total, 3);
  EXPECT_THROW(ReadFile(dir / "missing"), Error);
}

}  // namespace
}  // namespace xteval
