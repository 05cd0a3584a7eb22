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

#ifndef CLIMSOUP_THEMES_H_
#define CLIMSOUP_THEMES_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "climsoup/corpus.h"
#include "climsoup/metrics.h"
#include "climsoup/nncore.h"
#include "climsoup/tokenizer.h"

namespace climsoup {

enum class ThemeSide { kPro, kClean };

struct Theme {
  std::string id;
  ThemeSide side = ThemeSide::kPro;
  std::vector<std::string> phrases;

  bool operator==(const Theme&) const = default;
};

using PhraseBank = std::vector<Theme>;

// JSON array of {id, side: "pro"|"clean", phrases: [...]}. Throws DataError
// on a malformed entry or a repeated id.
PhraseBank ParsePhraseBank(std::string_view json_text);
PhraseBank LoadPhraseBank(const std::filesystem::path& path);
std::string SerializePhraseBank(const PhraseBank& bank);

// Lowercased theme ids, used as reserved vocabulary tokens and as input
// prefixes for the stance model.
std::string ThemeToken(const Theme& theme);
std::vector<std::string> ThemeTokens(const PhraseBank& bank);

struct ThemeAssignment {
  std::string ad_id;
  std::string theme_id;
  double score = 0;
  std::string runner_up_id;
  double runner_up_score = 0;
};

// Phrase embeddings computed once per (encoder, bank).
class ThemeIndex {
 public:
  ThemeIndex(const PhraseBank& bank, const Vocabulary& vocab, const nn::ParamSet& encoder);

  // Per-theme score = max cosine over the theme's phrases; ties resolve to
  // the earliest theme in bank order.
  ThemeAssignment Assign(const AdRecord& ad) const;
  ThemeAssignment AssignText(std::string_view ad_id, std::string_view body) const;
  std::vector<double> ThemeScores(std::string_view body) const;

  const PhraseBank& bank() const { return bank_; }

 private:
  PhraseBank bank_;
  const Vocabulary& vocab_;
  const nn::ParamSet& encoder_;
  std::vector<std::vector<std::vector<double>>> phrase_vecs_;  // [theme][phrase]
};

// Picks the best theme from a score vector (first maximum wins) and the
// runner-up among the rest.
ThemeAssignment PickTheme(const PhraseBank& bank, std::string_view ad_id,
                          const std::vector<double>& scores);

// ad_id,theme_id
std::map<std::string, std::string> ParseAnnotations(std::string_view csv_text);
std::map<std::string, std::string> LoadAnnotations(const std::filesystem::path& path);

std::string SerializeAssignments(const std::vector<ThemeAssignment>& assignments);
std::vector<ThemeAssignment> ParseAssignments(std::string_view csv_text);

struct ThemeAudit {
  double accuracy = 0;
  double macro_f1 = 0;
  size_t n = 0;
};

// Scores assignments against annotations over the bank's theme ids.
ThemeAudit EvalThemes(const std::vector<ThemeAssignment>& assignments,
                      const std::map<std::string, std::string>& annotations,
                      const PhraseBank& bank);

// Uniformly random theme per annotated ad, for the chance baseline.
std::vector<ThemeAssignment> RandomAssignments(const std::map<std::string, std::string>& annotations,
                                               const PhraseBank& bank, uint64_t seed);

}  // namespace climsoup

#endif  // CLIMSOUP_THEMES_H_
