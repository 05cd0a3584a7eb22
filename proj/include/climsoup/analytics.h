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

#ifndef CLIMSOUP_ANALYTICS_H_
#define CLIMSOUP_ANALYTICS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "climsoup/corpus.h"
#include "climsoup/metrics.h"

namespace climsoup::analytics {

enum class WeightKind { kAdCount, kImpressions, kSpend };
std::string_view WeightKindName(WeightKind k);
WeightKind ParseWeightKind(std::string_view name);

// An ad with the stance and theme the analyses group by.
struct AnalysisAd {
  AdRecord ad;
  StanceLabel stance = StanceLabel::kNeutral;
  std::string theme_id;
};

double Weight(const AdRecord& ad, WeightKind kind);

struct AggregateRow {
  std::string group;
  StanceLabel stance = StanceLabel::kNeutral;
  WeightKind weight = WeightKind::kAdCount;
  double value = 0;
  double share = 0;  // value / stance total; 0 when the total is 0
  // Share relative to a second, wider population of the same stance (for
  // theme shares: all labeled ads, not only correctly predicted ones).
  std::optional<double> share_of_all;
};

// Keeps ads whose predicted stance equals the gold stance. Throws DataError
// when an ad has no prediction.
std::vector<LabeledAd> FilterCorrect(const std::vector<LabeledAd>& ads,
                                     const std::map<std::string, StanceLabel>& predictions);

// Per-stance theme shares. When `all_ads` is given, share_of_all divides by
// that population's stance total instead.
std::vector<AggregateRow> ThemeDistribution(const std::vector<AnalysisAd>& ads, WeightKind kind,
                                            const std::vector<AnalysisAd>* all_ads = nullptr);

enum class DemoAxis { kGender, kAge };

struct DemoResult {
  std::vector<AggregateRow> rows;
  size_t excluded = 0;  // ads without a share map on this axis
};

// Impression-weighted bucket mass: sum of impressions_mid * share_b.
DemoResult DemoDistribution(const std::vector<AnalysisAd>& ads, DemoAxis axis);
DemoResult GeoDistribution(const std::vector<AnalysisAd>& ads);

struct FunderRank {
  StanceLabel stance;
  int rank = 0;  // 1-based
  std::string funder;
  double value = 0;
};

// Descending by the weight, ties by funder name.
std::vector<FunderRank> TopFunders(const std::vector<AnalysisAd>& ads, size_t n = 5,
                                   WeightKind by = WeightKind::kSpend);

struct Matrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> values;
};

// Pro-energy ads only: summed spend_mid per (theme, funder entity type).
// Funders missing from the registry fall under "other".
Matrix EntityThemeSpend(const std::vector<AnalysisAd>& ads, const std::vector<FundingEntity>& registry);

struct TokenCount {
  std::string theme_id;
  std::string token;
  size_t count = 0;
};

// Most frequent body tokens per theme (common function words skipped),
// ties broken lexicographically.
std::vector<TokenCount> ThemeTokenFrequencies(const std::vector<AnalysisAd>& ads, size_t top_n = 20);

enum class CountMode { kImpressions, kAdCount };
std::string_view CountModeName(CountMode m);
CountMode ParseCountMode(std::string_view name);

// Buckets of one demographic axis x {pro_energy, clean_energy}. In
// impression mode a cell is the sum of impressions_mid * share_b; in
// ad-count mode each ad counts once toward its largest bucket (first in
// bucket order on ties). Ads without a share map are skipped.
metrics::ContingencyTable DemoStanceTable(const std::vector<AnalysisAd>& ads, DemoAxis axis,
                                          CountMode mode);

// Serializers. `comment` lines go first as '#' records.
std::string AggregateCsv(const std::vector<AggregateRow>& rows, const std::string& comment = {});
std::string FunderCsv(const std::vector<FunderRank>& rows, const std::string& comment = {});
std::string MatrixCsv(const Matrix& m, const std::string& corner, const std::string& comment = {});
std::string TokenCsv(const std::vector<TokenCount>& rows, const std::string& comment = {});

}  // namespace climsoup::analytics

#endif  // CLIMSOUP_ANALYTICS_H_
