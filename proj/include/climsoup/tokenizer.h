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

#ifndef CLIMSOUP_TOKENIZER_H_
#define CLIMSOUP_TOKENIZER_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace climsoup {

inline constexpr size_t kMaxSeqLen = 110;

// Lowercases and splits on word boundaries. Word characters are ASCII
// letters, digits and '_', plus any non-ASCII code point outside the
// Unicode punctuation and space blocks (so "don’t" splits like "don't").
std::vector<std::string> Tokenize(std::string_view text);

// Splits text into sentences at '.', '!' or '?' followed by whitespace or
// end of text. Returned sentences keep their terminal punctuation.
std::vector<std::string> SplitSentences(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSep = 2;
  static constexpr std::string_view kPadToken = "[PAD]";
  static constexpr std::string_view kUnkToken = "[UNK]";
  static constexpr std::string_view kSepToken = "[SEP]";

  Vocabulary();

  // Specials, then `reserved` in the given order, then the most frequent
  // tokens of `texts` (ties broken lexicographically) until `max_size`.
  static Vocabulary Build(const std::vector<std::string>& texts, size_t max_size,
                          const std::vector<std::string>& reserved = {});

  size_t size() const { return tokens_.size(); }
  int Id(std::string_view token) const;  // kUnk when absent
  bool Contains(std::string_view token) const;
  const std::string& Token(int id) const { return tokens_.at(static_cast<size_t>(id)); }

  // Token ids for `text`, truncated to kMaxSeqLen.
  std::vector<int> Encode(std::string_view text) const;
  std::vector<int> EncodeTokens(const std::vector<std::string>& tokens) const;

  // One token per line; id = line number.
  std::string Serialize() const;
  static Vocabulary Parse(std::string_view text);
  std::string Digest() const;

 private:
  void Append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace climsoup

#endif  // CLIMSOUP_TOKENIZER_H_
