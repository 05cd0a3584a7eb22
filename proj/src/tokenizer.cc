// Copyright 2026 The climsoup Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "climsoup/tokenizer.h"

#include <algorithm>
#include <map>

#include "climsoup/common.h"

namespace climsoup {

namespace {

// Decodes one UTF-8 code point starting at text[i]; advances i. Invalid
// bytes decode as themselves so no input is dropped.
char32_t DecodeUtf8(std::string_view text, size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  auto cont = [&](size_t k) -> int {
    if (i + k >= text.size()) return -1;
    auto b = static_cast<unsigned char>(text[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    int c1 = cont(1);
    if (c1 >= 0) {
      i += 2;
      return static_cast<char32_t>(((b0 & 0x1F) << 6) | c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      i += 3;
      return static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      i += 4;
      return static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3);
    }
  }
  ++i;
  return b0;
}

void EncodeUtf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool IsWordCodePoint(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') ||
           cp == '_';
  }
  if (cp <= 0xBF) return false;                   // Latin-1 controls and punctuation
  if (cp == 0xD7 || cp == 0xF7) return false;     // multiplication / division signs
  if (cp >= 0x2000 && cp <= 0x206F) return false; // general punctuation, spaces
  if (cp >= 0x20A0 && cp <= 0x20CF) return false; // currency
  if (cp >= 0x3000 && cp <= 0x303F) return false; // CJK punctuation
  if (cp == 0xFEFF) return false;
  return true;
}

char32_t ToLower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  size_t i = 0;
  while (i < text.size()) {
    char32_t cp = DecodeUtf8(text, i);
    if (IsWordCodePoint(cp)) {
      EncodeUtf8(ToLower(cp), current);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    bool at_end = i + 1 == text.size();
    bool before_space = !at_end && std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (at_end || before_space) {
      std::string s = Trim(text.substr(start, i + 1 - start));
      if (!s.empty()) out.push_back(std::move(s));
      start = i + 1;
    }
  }
  std::string tail = Trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

Vocabulary::Vocabulary() {
  Append(std::string(kPadToken));
  Append(std::string(kUnkToken));
  Append(std::string(kSepToken));
}

void Vocabulary::Append(std::string token) {
  if (ids_.count(token)) return;
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::Build(const std::vector<std::string>& texts, size_t max_size,
                             const std::vector<std::string>& reserved) {
  Vocabulary v;
  for (const auto& r : reserved) {
    if (v.size() >= max_size) break;
    v.Append(r);
  }
  std::map<std::string, size_t> counts;
  for (const auto& t : texts) {
    for (auto& tok : Tokenize(t)) ++counts[std::move(tok)];
  }
  std::vector<std::pair<std::string, size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [tok, n] : ranked) {
    if (v.size() >= max_size) break;
    v.Append(std::move(tok));
  }
  return v;
}

int Vocabulary::Id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::Contains(std::string_view token) const {
  return ids_.count(std::string(token)) > 0;
}

std::vector<int> Vocabulary::EncodeTokens(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(std::min(tokens.size(), kMaxSeqLen));
  for (const auto& t : tokens) {
    if (ids.size() == kMaxSeqLen) break;
    ids.push_back(Id(t));
  }
  return ids;
}

std::vector<int> Vocabulary::Encode(std::string_view text) const {
  return EncodeTokens(Tokenize(text));
}

std::string Vocabulary::Serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

Vocabulary Vocabulary::Parse(std::string_view text) {
  Vocabulary v;
  v.tokens_.clear();
  v.ids_.clear();
  auto lines = SplitString(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& line : lines) {
    if (v.ids_.count(line)) throw DataError("vocabulary: duplicate token '" + line + "'");
    v.Append(std::move(line));
  }
  if (v.tokens_.size() < 3 || v.tokens_[kPad] != kPadToken || v.tokens_[kUnk] != kUnkToken ||
      v.tokens_[kSep] != kSepToken) {
    throw DataError("vocabulary: special tokens missing from the first three lines");
  }
  return v;
}

std::string Vocabulary::Digest() const { return HexU64(Fnv1a64(Serialize())); }

}  // namespace climsoup
