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

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>

namespace xteval {

std::string NormalizeWhitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

namespace {

struct DigestContext {
  DigestContext() : ctx(EVP_MD_CTX_new()) {
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest initialization failed");
    }
  }
  ~DigestContext() { EVP_MD_CTX_free(ctx); }
  DigestContext(const DigestContext&) = delete;
  DigestContext& operator=(const DigestContext&) = delete;

  void Update(const char* data, std::size_t n) {
    EVP_DigestUpdate(ctx, data, n);
  }

  std::string HexDigest() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest.data(), &len);
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
      hex += fmt::format("{:02x}", digest[i]);
    }
    return hex;
  }

  EVP_MD_CTX* ctx;
};

}  // namespace

std::string Sha256Hex(std::string_view data) {
  DigestContext ctx;
  ctx.Update(data.data(), data.size());
  return ctx.HexDigest();
}

std::string Sha256File(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  DigestContext ctx;
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    ctx.Update(buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  return ctx.HexDigest();
}

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

SeedHasher& SeedHasher::Add(std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    state_ ^= (value >> (8 * i)) & 0xffu;
    state_ *= 1099511628211ull;
  }
  return *this;
}

SeedHasher& SeedHasher::Add(std::string_view value) {
  Add(static_cast<std::uint64_t>(value.size()));
  for (char c : value) {
    state_ ^= static_cast<unsigned char>(c);
    state_ *= 1099511628211ull;
  }
  return *this;
}

std::uint64_t SeedHasher::Finish() const { return SplitMix64(state_); }

double UnitInterval(std::uint64_t key) {
  return static_cast<double>(SplitMix64(key) >> 11) * 0x1.0p-53;
}

std::size_t UniformIndex(Rng& rng, std::size_t n) {
  if (n == 0) throw Error("UniformIndex: empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return static_cast<std::size_t>(draw % bound);
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void ForEachJsonLine(const std::filesystem::path& path,
                     const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (NormalizeWhitespace(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(fmt::format("{}:{}: malformed JSON record ({})",
                              path.string(), line_no, e.what()));
    }
    fn(line_no, record);
  }
}

void WriteJsonLines(const std::filesystem::path& path,
                    const std::vector<json>& records) {
  std::string out;
  for (const json& r : records) {
    out += r.dump();
    out += '\n';
  }
  WriteFile(path, out);
}

json ReadJson(const std::filesystem::path& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

void WriteJson(const std::filesystem::path& path, const json& value) {
  WriteFile(path, value.dump(2) + "\n");
}

StrictObject::StrictObject(const json& object, std::string context)
    : object_(object), context_(std::move(context)) {
  if (!object_.is_object()) throw Error(context_ + ": expected an object");
}

bool StrictObject::Has(std::string_view key) const {
  return object_.contains(std::string(key));
}

const json& StrictObject::Raw(std::string_view key) {
  auto it = object_.find(std::string(key));
  if (it == object_.end()) {
    throw Error(context_ + ": missing required field '" + std::string(key) +
                "'");
  }
  consumed_.emplace_back(key);
  return *it;
}

void StrictObject::Finish() const {
  for (auto it = object_.begin(); it != object_.end(); ++it) {
    if (std::find(consumed_.begin(), consumed_.end(), it.key()) ==
        consumed_.end()) {
      throw Error(context_ + ": unknown key '" + it.key() + "'");
    }
  }
}

std::string FormatDouble(double value, int precision) {
  return fmt::format("{:.{}f}", value, precision);
}

}  // namespace xteval
