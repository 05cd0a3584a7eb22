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

#ifndef CLIMSOUP_CORPUS_H_
#define CLIMSOUP_CORPUS_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace climsoup {

enum class StanceLabel { kProEnergy = 0, kCleanEnergy = 1, kNeutral = 2 };
inline constexpr int kNumStances = 3;

std::string_view StanceName(StanceLabel s);
// Accepts "pro_energy", "clean_energy", "neutral". Throws DataError.
StanceLabel ParseStance(std::string_view name);
std::optional<StanceLabel> TryParseStance(std::string_view name);

enum class EntityType { kCorporation, kIndustryAssociation, kAdvocacyGroup, kOther };
std::string_view EntityTypeName(EntityType t);
EntityType ParseEntityType(std::string_view name);

inline constexpr std::array<std::string_view, 3> kGenderBuckets = {"male", "female", "unknown"};
inline constexpr std::array<std::string_view, 7> kAgeBuckets = {
    "18-24", "25-34", "35-44", "45-54", "55-64", "65+", "unknown"};

// Bucket -> fraction. Empty means the platform reported nothing.
using ShareMap = std::map<std::string, double>;

inline constexpr double kShareSumTolerance = 1e-3;

struct AdRecord {
  std::string id;
  std::optional<std::string> title;
  std::optional<std::string> description;
  std::string body;
  std::string funding_entity;
  double spend_lower = 0, spend_upper = 0;
  double impressions_lower = 0, impressions_upper = 0;
  ShareMap gender_share;
  ShareMap age_share;
  ShareMap state_share;

  double SpendMid() const { return 0.5 * (spend_lower + spend_upper); }
  double ImpressionsMid() const { return 0.5 * (impressions_lower + impressions_upper); }

  bool operator==(const AdRecord&) const = default;
};

// Returns the first violated invariant, or nullopt when the record is valid.
std::optional<std::string> ValidateRecord(const AdRecord& ad);

using Corpus = std::vector<AdRecord>;

struct FundingEntity {
  std::string name;
  std::optional<StanceLabel> stance;  // nullopt = unknown
  EntityType entity_type = EntityType::kOther;
};

struct IngestDiagnostic {
  size_t line = 0;
  std::string id;
  std::string message;
};

struct IngestResult {
  Corpus corpus;
  std::vector<IngestDiagnostic> rejected;
};

enum class CorpusFormat { kJsonl, kCsv };
CorpusFormat ParseCorpusFormat(std::string_view name);

IngestResult IngestText(std::string_view text, CorpusFormat format);
// Throws DataError when the file is unreadable.
IngestResult Ingest(const std::filesystem::path& path, CorpusFormat format);

std::string SerializeJsonl(const Corpus& corpus);
std::string SerializeCsv(const Corpus& corpus);

// One phrase per line; blank lines and '#' comments ignored; lowercased.
std::vector<std::string> LoadKeywords(const std::filesystem::path& path);

// Keeps ads where any text field, lowercased, contains a keyword delimited
// by word boundaries on both sides.
Corpus FilterKeywords(const Corpus& corpus, const std::vector<std::string>& keywords);
bool ContainsKeyword(std::string_view lowered_text, std::string_view keyword);

// CSV with columns name,stance,entity_type. Conflicting duplicate stances
// throw DataError; identical duplicates collapse.
std::vector<FundingEntity> LoadRegistry(const std::filesystem::path& path);
std::vector<FundingEntity> ParseRegistry(std::string_view csv_text);
std::string SerializeRegistry(const std::vector<FundingEntity>& registry);

struct LabeledAd {
  AdRecord ad;
  StanceLabel stance;
};

struct LabeledCorpus {
  std::vector<LabeledAd> labeled;
  Corpus unlabeled;
};

LabeledCorpus PropagateStance(const Corpus& corpus, const std::vector<FundingEntity>& registry);

enum class Split { kTrain, kVal, kTest };
std::string_view SplitName(Split s);
Split ParseSplit(std::string_view name);

struct SplitAssignment {
  std::map<std::string, Split> entity_split;

  std::vector<std::string> Entities(Split s) const;
  // Ads funded by entities assigned to `s`, in corpus order.
  std::vector<LabeledAd> Select(const std::vector<LabeledAd>& ads, Split s) const;
};

struct SplitOptions {
  double test_frac = 0.2;
  double val_frac = 0.2;
};

// Partitions the labeled funders into test, validation and train sets.
// Entity counts use round-half-up: test = round(test_frac * E), val =
// round(val_frac * (E - test)).
SplitAssignment SplitByEntity(const std::vector<LabeledAd>& labeled, uint64_t seed,
                              SplitOptions options = {});
// Same procedure over an explicit entity list (sorted internally).
SplitAssignment SplitEntities(std::vector<std::string> entities, uint64_t seed,
                              SplitOptions options = {});

std::string SerializeSplit(const SplitAssignment& split);
SplitAssignment ParseSplitCsv(std::string_view text);

}  // namespace climsoup

#endif  // CLIMSOUP_CORPUS_H_
