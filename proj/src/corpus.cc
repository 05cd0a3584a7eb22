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

#include "climsoup/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "climsoup/common.h"
#include "climsoup/csv.h"

namespace climsoup {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view StanceName(StanceLabel s) {
  switch (s) {
    case StanceLabel::kProEnergy: return "pro_energy";
    case StanceLabel::kCleanEnergy: return "clean_energy";
    case StanceLabel::kNeutral: return "neutral";
  }
  return "?";
}

std::optional<StanceLabel> TryParseStance(std::string_view name) {
  if (name == "pro_energy") return StanceLabel::kProEnergy;
  if (name == "clean_energy") return StanceLabel::kCleanEnergy;
  if (name == "neutral") return StanceLabel::kNeutral;
  return std::nullopt;
}

StanceLabel ParseStance(std::string_view name) {
  auto s = TryParseStance(name);
  if (!s) throw DataError("unknown stance label: '" + std::string(name) + "'");
  return *s;
}

std::string_view EntityTypeName(EntityType t) {
  switch (t) {
    case EntityType::kCorporation: return "corporation";
    case EntityType::kIndustryAssociation: return "industry_association";
    case EntityType::kAdvocacyGroup: return "advocacy_group";
    case EntityType::kOther: return "other";
  }
  return "?";
}

EntityType ParseEntityType(std::string_view name) {
  if (name == "corporation") return EntityType::kCorporation;
  if (name == "industry_association") return EntityType::kIndustryAssociation;
  if (name == "advocacy_group") return EntityType::kAdvocacyGroup;
  if (name == "other" || name.empty()) return EntityType::kOther;
  throw DataError("unknown entity type: '" + std::string(name) + "'");
}

CorpusFormat ParseCorpusFormat(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "csv") return CorpusFormat::kCsv;
  throw UsageError("unknown corpus format: '" + std::string(name) + "' (expected jsonl or csv)");
}

namespace {

bool IsStateCode(std::string_view key) {
  return key.size() == 2 && std::isupper(static_cast<unsigned char>(key[0])) &&
         std::isupper(static_cast<unsigned char>(key[1]));
}

std::optional<std::string> ValidateShares(const ShareMap& shares, std::string_view what,
                                          bool (*key_ok)(std::string_view)) {
  if (shares.empty()) return std::nullopt;
  double sum = 0;
  for (const auto& [key, value] : shares) {
    if (!key_ok(key)) return std::string(what) + ": unknown bucket '" + key + "'";
    if (!std::isfinite(value) || value < 0 || value > 1) {
      return std::string(what) + ": fraction out of range for '" + key + "'";
    }
    sum += value;
  }
  if (std::abs(sum - 1.0) > kShareSumTolerance) {
    return std::string(what) + ": shares sum to " + FormatDouble(sum) + ", expected 1";
  }
  return std::nullopt;
}

bool GenderKeyOk(std::string_view k) {
  return std::find(kGenderBuckets.begin(), kGenderBuckets.end(), k) != kGenderBuckets.end();
}
bool AgeKeyOk(std::string_view k) {
  return std::find(kAgeBuckets.begin(), kAgeBuckets.end(), k) != kAgeBuckets.end();
}
bool StateKeyOk(std::string_view k) { return IsStateCode(k); }

std::optional<std::string> OptionalText(const std::string& s) {
  if (Trim(s).empty()) return std::nullopt;
  return s;
}

double NumberField(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return 0.0;
  if (!it->is_number()) throw DataError(std::string(key) + " is not a number");
  return it->get<double>();
}

std::string StringField(const json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return {};
  if (!it->is_string()) throw DataError(std::string(key) + " is not a string");
  return it->get<std::string>();
}

ShareMap ShareField(const json& row, const char* key) {
  ShareMap out;
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return out;
  if (!it->is_object()) throw DataError(std::string(key) + " is not an object");
  for (const auto& [k, v] : it->items()) {
    if (!v.is_number()) throw DataError(std::string(key) + "." + k + " is not a number");
    out[k] = v.get<double>();
  }
  return out;
}

AdRecord RecordFromJson(const json& row) {
  if (!row.is_object()) throw DataError("record is not a JSON object");
  AdRecord ad;
  ad.id = StringField(row, "id");
  ad.title = OptionalText(StringField(row, "title"));
  ad.description = OptionalText(StringField(row, "description"));
  ad.body = StringField(row, "body");
  ad.funding_entity = Trim(StringField(row, "funding_entity"));
  ad.spend_lower = NumberField(row, "spend_lower");
  ad.spend_upper = NumberField(row, "spend_upper");
  ad.impressions_lower = NumberField(row, "impressions_lower");
  ad.impressions_upper = NumberField(row, "impressions_upper");
  ad.gender_share = ShareField(row, "gender_share");
  ad.age_share = ShareField(row, "age_share");
  ad.state_share = ShareField(row, "state_share");
  return ad;
}

ordered_json RecordToJson(const AdRecord& ad) {
  ordered_json j;
  j["id"] = ad.id;
  if (ad.title) j["title"] = *ad.title;
  if (ad.description) j["description"] = *ad.description;
  j["body"] = ad.body;
  j["funding_entity"] = ad.funding_entity;
  j["spend_lower"] = ad.spend_lower;
  j["spend_upper"] = ad.spend_upper;
  j["impressions_lower"] = ad.impressions_lower;
  j["impressions_upper"] = ad.impressions_upper;
  j["gender_share"] = ordered_json::object();
  for (const auto& [k, v] : ad.gender_share) j["gender_share"][k] = v;
  j["age_share"] = ordered_json::object();
  for (const auto& [k, v] : ad.age_share) j["age_share"][k] = v;
  j["state_share"] = ordered_json::object();
  for (const auto& [k, v] : ad.state_share) j["state_share"][k] = v;
  return j;
}

const std::vector<std::string> kCsvHeader = {
    "id", "title", "description", "body", "funding_entity", "spend_lower", "spend_upper",
    "impressions_lower", "impressions_upper", "gender_share", "age_share", "state_share"};

// Map cells are "key:value;key:value".
std::string EncodeShareCell(const ShareMap& m) {
  std::string out;
  for (const auto& [k, v] : m) {
    if (!out.empty()) out.push_back(';');
    out += k + ":" + FormatDouble(v);
  }
  return out;
}

double ParseNumber(const std::string& cell, std::string_view what) {
  std::string t = Trim(cell);
  if (t.empty()) return 0.0;
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) throw DataError(std::string(what) + ": not a number: '" + t + "'");
  return v;
}

ShareMap DecodeShareCell(const std::string& cell, std::string_view what) {
  ShareMap m;
  std::string t = Trim(cell);
  if (t.empty()) return m;
  for (const auto& part : SplitString(t, ';')) {
    auto colon = part.rfind(':');
    if (colon == std::string::npos) throw DataError(std::string(what) + ": malformed entry '" + part + "'");
    m[Trim(part.substr(0, colon))] = ParseNumber(part.substr(colon + 1), what);
  }
  return m;
}

void AcceptOrReject(AdRecord ad, size_t line, std::set<std::string>& seen, IngestResult& result) {
  if (auto err = ValidateRecord(ad)) {
    result.rejected.push_back({line, ad.id, *err});
    return;
  }
  if (!seen.insert(ad.id).second) {
    result.rejected.push_back({line, ad.id, "duplicate id"});
    return;
  }
  result.corpus.push_back(std::move(ad));
}

}  // namespace

std::optional<std::string> ValidateRecord(const AdRecord& ad) {
  if (Trim(ad.id).empty()) return "missing id";
  if (NormalizeWhitespace(ad.body).empty()) return "empty body";
  if (ad.funding_entity.empty()) return "missing funding_entity";
  for (double v : {ad.spend_lower, ad.spend_upper, ad.impressions_lower, ad.impressions_upper}) {
    if (!std::isfinite(v) || v < 0) return "negative or non-finite spend/impressions";
  }
  if (ad.spend_lower > ad.spend_upper) return "spend_lower exceeds spend_upper";
  if (ad.impressions_lower > ad.impressions_upper) return "impressions_lower exceeds impressions_upper";
  if (auto e = ValidateShares(ad.gender_share, "gender_share", GenderKeyOk)) return e;
  if (auto e = ValidateShares(ad.age_share, "age_share", AgeKeyOk)) return e;
  if (auto e = ValidateShares(ad.state_share, "state_share", StateKeyOk)) return e;
  return std::nullopt;
}

IngestResult IngestText(std::string_view text, CorpusFormat format) {
  IngestResult result;
  std::set<std::string> seen;
  if (format == CorpusFormat::kJsonl) {
    size_t line_no = 0;
    for (const auto& line : SplitString(text, '\n')) {
      ++line_no;
      if (Trim(line).empty()) continue;
      AdRecord ad;
      try {
        ad = RecordFromJson(json::parse(line));
      } catch (const json::exception& e) {
        result.rejected.push_back({line_no, "", std::string("malformed JSON: ") + e.what()});
        continue;
      } catch (const DataError& e) {
        result.rejected.push_back({line_no, "", e.what()});
        continue;
      }
      AcceptOrReject(std::move(ad), line_no, seen, result);
    }
    return result;
  }

  csv::Table table = csv::ParseTable(text);
  std::vector<int> cols;
  for (const auto& name : kCsvHeader) {
    cols.push_back(table.Column(name));
  }
  for (const char* required : {"id", "body", "funding_entity"}) {
    if (table.Column(required) < 0) {
      throw DataError(std::string("CSV corpus lacks required column '") + required + "'");
    }
  }
  for (const auto& row : table.rows) {
    AdRecord ad;
    try {
      ad.id = table.Get(row, cols[0]);
      ad.title = OptionalText(table.Get(row, cols[1]));
      ad.description = OptionalText(table.Get(row, cols[2]));
      ad.body = table.Get(row, cols[3]);
      ad.funding_entity = Trim(table.Get(row, cols[4]));
      ad.spend_lower = ParseNumber(table.Get(row, cols[5]), "spend_lower");
      ad.spend_upper = ParseNumber(table.Get(row, cols[6]), "spend_upper");
      ad.impressions_lower = ParseNumber(table.Get(row, cols[7]), "impressions_lower");
      ad.impressions_upper = ParseNumber(table.Get(row, cols[8]), "impressions_upper");
      ad.gender_share = DecodeShareCell(table.Get(row, cols[9]), "gender_share");
      ad.age_share = DecodeShareCell(table.Get(row, cols[10]), "age_share");
      ad.state_share = DecodeShareCell(table.Get(row, cols[11]), "state_share");
    } catch (const DataError& e) {
      result.rejected.push_back({row.line, ad.id, e.what()});
      continue;
    }
    AcceptOrReject(std::move(ad), row.line, seen, result);
  }
  return result;
}

IngestResult Ingest(const std::filesystem::path& path, CorpusFormat format) {
  return IngestText(ReadFile(path), format);
}

std::string SerializeJsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& ad : corpus) {
    out += RecordToJson(ad).dump();
    out.push_back('\n');
  }
  return out;
}

std::string SerializeCsv(const Corpus& corpus) {
  csv::Writer w;
  w.WriteRow(kCsvHeader);
  for (const auto& ad : corpus) {
    w.WriteRow({ad.id, ad.title.value_or(""), ad.description.value_or(""), ad.body,
                ad.funding_entity, FormatDouble(ad.spend_lower), FormatDouble(ad.spend_upper),
                FormatDouble(ad.impressions_lower), FormatDouble(ad.impressions_upper),
                EncodeShareCell(ad.gender_share), EncodeShareCell(ad.age_share),
                EncodeShareCell(ad.state_share)});
  }
  return w.str();
}

std::vector<std::string> LoadKeywords(const std::filesystem::path& path) {
  std::vector<std::string> keywords;
  for (const auto& line : SplitString(ReadFile(path), '\n')) {
    std::string k = ToLowerAscii(NormalizeWhitespace(line));
    if (k.empty() || k.front() == '#') continue;
    keywords.push_back(std::move(k));
  }
  if (keywords.empty()) throw DataError("keyword file is empty: " + path.string());
  return keywords;
}

namespace {
bool IsWordByte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}
}  // namespace

bool ContainsKeyword(std::string_view text, std::string_view keyword) {
  if (keyword.empty()) return false;
  size_t pos = text.find(keyword);
  while (pos != std::string_view::npos) {
    bool left_ok = pos == 0 || !IsWordByte(text[pos - 1]);
    size_t end = pos + keyword.size();
    bool right_ok = end == text.size() || !IsWordByte(text[end]);
    if (left_ok && right_ok) return true;
    pos = text.find(keyword, pos + 1);
  }
  return false;
}

Corpus FilterKeywords(const Corpus& corpus, const std::vector<std::string>& keywords) {
  Corpus out;
  for (const auto& ad : corpus) {
    std::string text = ToLowerAscii(ad.title.value_or("") + "\n" + ad.description.value_or("") +
                                    "\n" + ad.body);
    bool hit = std::any_of(keywords.begin(), keywords.end(),
                           [&](const std::string& k) { return ContainsKeyword(text, k); });
    if (hit) out.push_back(ad);
  }
  return out;
}

std::vector<FundingEntity> ParseRegistry(std::string_view csv_text) {
  csv::Table table = csv::ParseTable(csv_text);
  int c_name = table.Column("name"), c_stance = table.Column("stance"),
      c_type = table.Column("entity_type");
  if (c_name < 0 || c_stance < 0) throw DataError("registry CSV needs columns name,stance[,entity_type]");
  std::vector<FundingEntity> out;
  std::map<std::string, size_t> index;
  for (const auto& row : table.rows) {
    FundingEntity e;
    e.name = Trim(table.Get(row, c_name));
    if (e.name.empty()) throw DataError("registry line " + std::to_string(row.line) + ": empty name");
    std::string stance = Trim(table.Get(row, c_stance));
    if (!stance.empty() && stance != "unknown") e.stance = ParseStance(stance);
    if (c_type >= 0) e.entity_type = ParseEntityType(Trim(table.Get(row, c_type)));
    auto it = index.find(e.name);
    if (it != index.end()) {
      if (out[it->second].stance != e.stance) {
        throw DataError("registry: conflicting stances for '" + e.name + "'");
      }
      continue;
    }
    index[e.name] = out.size();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<FundingEntity> LoadRegistry(const std::filesystem::path& path) {
  return ParseRegistry(ReadFile(path));
}

std::string SerializeRegistry(const std::vector<FundingEntity>& registry) {
  csv::Writer w;
  w.WriteRow({"name", "stance", "entity_type"});
  for (const auto& e : registry) {
    w.WriteRow({e.name, e.stance ? std::string(StanceName(*e.stance)) : "unknown",
                std::string(EntityTypeName(e.entity_type))});
  }
  return w.str();
}

LabeledCorpus PropagateStance(const Corpus& corpus, const std::vector<FundingEntity>& registry) {
  std::map<std::string, std::optional<StanceLabel>> stance_of;
  for (const auto& e : registry) {
    auto [it, inserted] = stance_of.emplace(e.name, e.stance);
    if (!inserted && it->second != e.stance) {
      throw DataError("registry: conflicting stances for '" + e.name + "'");
    }
  }
  LabeledCorpus out;
  for (const auto& ad : corpus) {
    auto it = stance_of.find(ad.funding_entity);
    if (it != stance_of.end() && it->second) {
      out.labeled.push_back({ad, *it->second});
    } else {
      out.unlabeled.push_back(ad);
    }
  }
  return out;
}

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw DataError("unknown split: '" + std::string(name) + "'");
}

std::vector<std::string> SplitAssignment::Entities(Split s) const {
  std::vector<std::string> out;
  for (const auto& [name, split] : entity_split) {
    if (split == s) out.push_back(name);
  }
  return out;
}

std::vector<LabeledAd> SplitAssignment::Select(const std::vector<LabeledAd>& ads, Split s) const {
  std::vector<LabeledAd> out;
  for (const auto& a : ads) {
    auto it = entity_split.find(a.ad.funding_entity);
    if (it != entity_split.end() && it->second == s) out.push_back(a);
  }
  return out;
}

SplitAssignment SplitEntities(std::vector<std::string> entities, uint64_t seed,
                              SplitOptions options) {
  std::sort(entities.begin(), entities.end());
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  const int64_t total = static_cast<int64_t>(entities.size());
  if (total < 5) {
    throw DataError("split needs at least 5 labeled funding entities, got " + std::to_string(total));
  }
  const int64_t n_test = RoundHalfUp(options.test_frac * static_cast<double>(total));
  const int64_t n_val = RoundHalfUp(options.val_frac * static_cast<double>(total - n_test));
  const int64_t n_train = total - n_test - n_val;
  if (n_test < 1 || n_val < 1 || n_train < 1) {
    throw DataError("too few entities to form non-empty train/val/test splits");
  }
  Rng rng(seed);
  rng.Shuffle(entities);
  SplitAssignment out;
  for (int64_t i = 0; i < total; ++i) {
    Split s = i < n_test ? Split::kTest : (i < n_test + n_val ? Split::kVal : Split::kTrain);
    out.entity_split[entities[static_cast<size_t>(i)]] = s;
  }
  return out;
}

SplitAssignment SplitByEntity(const std::vector<LabeledAd>& labeled, uint64_t seed,
                              SplitOptions options) {
  std::vector<std::string> entities;
  for (const auto& a : labeled) entities.push_back(a.ad.funding_entity);
  return SplitEntities(std::move(entities), seed, options);
}

std::string SerializeSplit(const SplitAssignment& split) {
  csv::Writer w;
  w.WriteRow({"entity", "split"});
  for (const auto& [name, s] : split.entity_split) w.WriteRow({name, std::string(SplitName(s))});
  return w.str();
}

SplitAssignment ParseSplitCsv(std::string_view text) {
  csv::Table table = csv::ParseTable(text);
  int c_entity = table.Column("entity"), c_split = table.Column("split");
  if (c_entity < 0 || c_split < 0) throw DataError("split CSV needs columns entity,split");
  SplitAssignment out;
  for (const auto& row : table.rows) {
    out.entity_split[table.Get(row, c_entity)] = ParseSplit(table.Get(row, c_split));
  }
  return out;
}

}  // namespace climsoup
