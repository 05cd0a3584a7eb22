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

#include "climsoup/themes.h"

#include <set>

#include <nlohmann/json.hpp>

#include "climsoup/common.h"
#include "climsoup/csv.h"
#include "climsoup/embedder.h"

namespace climsoup {

using nlohmann::json;
using nlohmann::ordered_json;

PhraseBank ParsePhraseBank(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("phrase bank is not valid JSON: ") + e.what());
  }
  if (!root.is_array()) throw DataError("phrase bank must be a JSON array");
  PhraseBank bank;
  std::set<std::string> ids;
  for (const auto& item : root) {
    Theme t;
    try {
      t.id = item.at("id").get<std::string>();
      const std::string side = item.at("side").get<std::string>();
      if (side == "pro") {
        t.side = ThemeSide::kPro;
      } else if (side == "clean") {
        t.side = ThemeSide::kClean;
      } else {
        throw DataError("theme '" + t.id + "': side must be 'pro' or 'clean'");
      }
      for (const auto& p : item.at("phrases")) t.phrases.push_back(p.get<std::string>());
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed theme entry: ") + e.what());
    }
    if (t.id.empty()) throw DataError("theme with empty id");
    if (t.phrases.empty()) throw DataError("theme '" + t.id + "' has no phrases");
    if (!ids.insert(t.id).second) throw DataError("duplicate theme id '" + t.id + "'");
    bank.push_back(std::move(t));
  }
  if (bank.empty()) throw DataError("phrase bank is empty");
  return bank;
}

PhraseBank LoadPhraseBank(const std::filesystem::path& path) { return ParsePhraseBank(ReadFile(path)); }

std::string SerializePhraseBank(const PhraseBank& bank) {
  ordered_json root = ordered_json::array();
  for (const auto& t : bank) {
    ordered_json item;
    item["id"] = t.id;
    item["side"] = t.side == ThemeSide::kPro ? "pro" : "clean";
    item["phrases"] = t.phrases;
    root.push_back(item);
  }
  return root.dump(2) + "\n";
}

std::string ThemeToken(const Theme& theme) { return ToLowerAscii(theme.id); }

std::vector<std::string> ThemeTokens(const PhraseBank& bank) {
  std::vector<std::string> out;
  for (const auto& t : bank) out.push_back(ThemeToken(t));
  return out;
}

ThemeIndex::ThemeIndex(const PhraseBank& bank, const Vocabulary& vocab, const nn::ParamSet& encoder)
    : bank_(bank), vocab_(vocab), encoder_(encoder) {
  for (const auto& theme : bank_) {
    std::vector<std::vector<double>> vecs;
    for (const auto& phrase : theme.phrases) vecs.push_back(Encode(phrase, vocab_, encoder_));
    phrase_vecs_.push_back(std::move(vecs));
  }
}

std::vector<double> ThemeIndex::ThemeScores(std::string_view body) const {
  const auto v = Encode(body, vocab_, encoder_);
  std::vector<double> scores;
  scores.reserve(phrase_vecs_.size());
  for (const auto& phrases : phrase_vecs_) {
    double best = -2.0;
    for (const auto& p : phrases) best = std::max(best, Cosine(v, p));
    scores.push_back(best);
  }
  return scores;
}

ThemeAssignment PickTheme(const PhraseBank& bank, std::string_view ad_id,
                          const std::vector<double>& scores) {
  if (scores.size() != bank.size() || bank.empty()) {
    throw std::invalid_argument("PickTheme: one score per theme required");
  }
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  ThemeAssignment a;
  a.ad_id = std::string(ad_id);
  a.theme_id = bank[best].id;
  a.score = scores[best];
  if (bank.size() > 1) {
    size_t second = best == 0 ? 1 : 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (i != best && scores[i] > scores[second]) second = i;
    }
    a.runner_up_id = bank[second].id;
    a.runner_up_score = scores[second];
  } else {
    a.runner_up_score = a.score;
  }
  return a;
}

ThemeAssignment ThemeIndex::AssignText(std::string_view ad_id, std::string_view body) const {
  return PickTheme(bank_, ad_id, ThemeScores(body));
}

ThemeAssignment ThemeIndex::Assign(const AdRecord& ad) const {
  if (NormalizeWhitespace(ad.body).empty()) throw DataError("ad '" + ad.id + "' has an empty body");
  return AssignText(ad.id, ad.body);
}

std::map<std::string, std::string> ParseAnnotations(std::string_view csv_text) {
  csv::Table table = csv::ParseTable(csv_text);
  int c_ad = table.Column("ad_id"), c_theme = table.Column("theme_id");
  if (c_ad < 0 || c_theme < 0) throw DataError("annotation CSV needs columns ad_id,theme_id");
  std::map<std::string, std::string> out;
  for (const auto& row : table.rows) out[table.Get(row, c_ad)] = Trim(table.Get(row, c_theme));
  return out;
}

std::map<std::string, std::string> LoadAnnotations(const std::filesystem::path& path) {
  return ParseAnnotations(ReadFile(path));
}

std::string SerializeAssignments(const std::vector<ThemeAssignment>& assignments) {
  csv::Writer w;
  w.WriteRow({"ad_id", "theme_id", "score", "runner_up_id", "runner_up_score"});
  for (const auto& a : assignments) {
    w.WriteRow({a.ad_id, a.theme_id, FormatDouble(a.score), a.runner_up_id,
                FormatDouble(a.runner_up_score)});
  }
  return w.str();
}

std::vector<ThemeAssignment> ParseAssignments(std::string_view csv_text) {
  csv::Table table = csv::ParseTable(csv_text);
  int c_ad = table.Column("ad_id"), c_theme = table.Column("theme_id"), c_score = table.Column("score"),
      c_ru = table.Column("runner_up_id"), c_rus = table.Column("runner_up_score");
  if (c_ad < 0 || c_theme < 0) throw DataError("assignment CSV needs columns ad_id,theme_id");
  std::vector<ThemeAssignment> out;
  for (const auto& row : table.rows) {
    ThemeAssignment a;
    a.ad_id = table.Get(row, c_ad);
    a.theme_id = table.Get(row, c_theme);
    if (c_score >= 0) a.score = std::stod(table.Get(row, c_score));
    if (c_ru >= 0) a.runner_up_id = table.Get(row, c_ru);
    if (c_rus >= 0) a.runner_up_score = std::stod(table.Get(row, c_rus));
    out.push_back(std::move(a));
  }
  return out;
}

ThemeAudit EvalThemes(const std::vector<ThemeAssignment>& assignments,
                      const std::map<std::string, std::string>& annotations,
                      const PhraseBank& bank) {
  if (annotations.empty()) throw DataError("theme audit: empty annotation set");
  std::map<std::string, int> index;
  for (size_t i = 0; i < bank.size(); ++i) index[bank[i].id] = static_cast<int>(i);
  std::map<std::string, int> assigned;
  for (const auto& a : assignments) {
    auto it = index.find(a.theme_id);
    if (it == index.end()) throw DataError("assignment uses unknown theme '" + a.theme_id + "'");
    assigned[a.ad_id] = it->second;
  }
  std::vector<int> pred, gold;
  for (const auto& [ad_id, theme_id] : annotations) {
    auto g = index.find(theme_id);
    if (g == index.end()) throw DataError("annotation uses unknown theme '" + theme_id + "'");
    auto p = assigned.find(ad_id);
    if (p == assigned.end()) throw DataError("annotated ad '" + ad_id + "' has no assignment");
    gold.push_back(g->second);
    pred.push_back(p->second);
  }
  auto report = metrics::Evaluate(pred, gold, static_cast<int>(bank.size()));
  return {report.accuracy, report.macro_f1, gold.size()};
}

std::vector<ThemeAssignment> RandomAssignments(const std::map<std::string, std::string>& annotations,
                                               const PhraseBank& bank, uint64_t seed) {
  Rng rng(DeriveSeed(seed, "random-themes"));
  std::vector<ThemeAssignment> out;
  for (const auto& [ad_id, unused] : annotations) {
    ThemeAssignment a;
    a.ad_id = ad_id;
    a.theme_id = bank[rng.UniformInt(bank.size())].id;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace climsoup
