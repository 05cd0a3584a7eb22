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

#include "climsoup/analytics.h"

#include <algorithm>
#include <functional>
#include <set>

#include "climsoup/common.h"
#include "climsoup/csv.h"
#include "climsoup/tokenizer.h"

namespace climsoup::analytics {

std::string_view WeightKindName(WeightKind k) {
  switch (k) {
    case WeightKind::kAdCount: return "ad_count";
    case WeightKind::kImpressions: return "impressions_mid";
    case WeightKind::kSpend: return "spend_mid";
  }
  return "?";
}

WeightKind ParseWeightKind(std::string_view name) {
  if (name == "ad_count") return WeightKind::kAdCount;
  if (name == "impressions_mid" || name == "impressions") return WeightKind::kImpressions;
  if (name == "spend_mid" || name == "spend") return WeightKind::kSpend;
  throw UsageError("unknown weight kind '" + std::string(name) + "'");
}

std::string_view CountModeName(CountMode m) {
  return m == CountMode::kImpressions ? "impressions" : "ad_count";
}

CountMode ParseCountMode(std::string_view name) {
  if (name == "impressions") return CountMode::kImpressions;
  if (name == "ad_count") return CountMode::kAdCount;
  throw UsageError("unknown contingency mode '" + std::string(name) + "'");
}

double Weight(const AdRecord& ad, WeightKind kind) {
  switch (kind) {
    case WeightKind::kAdCount: return 1.0;
    case WeightKind::kImpressions: return ad.ImpressionsMid();
    case WeightKind::kSpend: return ad.SpendMid();
  }
  return 0.0;
}

std::vector<LabeledAd> FilterCorrect(const std::vector<LabeledAd>& ads,
                                     const std::map<std::string, StanceLabel>& predictions) {
  std::vector<LabeledAd> out;
  for (const auto& la : ads) {
    auto it = predictions.find(la.ad.id);
    if (it == predictions.end()) throw DataError("no prediction for ad '" + la.ad.id + "'");
    if (it->second == la.stance) out.push_back(la);
  }
  return out;
}

namespace {

using Key = std::pair<StanceLabel, std::string>;

// Folds (stance, group) -> value into rows with per-stance shares.
std::vector<AggregateRow> ToRows(const std::map<Key, double>& sums, WeightKind kind) {
  std::map<StanceLabel, double> totals;
  for (const auto& [key, v] : sums) totals[key.first] += v;
  std::vector<AggregateRow> rows;
  for (const auto& [key, v] : sums) {
    AggregateRow r;
    r.stance = key.first;
    r.group = key.second;
    r.weight = kind;
    r.value = v;
    const double t = totals[key.first];
    r.share = t > 0 ? v / t : 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

const ShareMap& AxisShares(const AdRecord& ad, DemoAxis axis) {
  return axis == DemoAxis::kGender ? ad.gender_share : ad.age_share;
}

template <size_t N>
std::vector<std::string> Buckets(const std::array<std::string_view, N>& b) {
  return {b.begin(), b.end()};
}

std::vector<std::string> AxisBuckets(DemoAxis axis) {
  return axis == DemoAxis::kGender ? Buckets(kGenderBuckets) : Buckets(kAgeBuckets);
}

DemoResult ShareDistribution(const std::vector<AnalysisAd>& ads,
                             const std::function<const ShareMap&(const AdRecord&)>& shares) {
  DemoResult res;
  std::map<Key, double> sums;
  for (const auto& a : ads) {
    const ShareMap& m = shares(a.ad);
    if (m.empty()) {
      ++res.excluded;
      continue;
    }
    const double imp = a.ad.ImpressionsMid();
    for (const auto& [bucket, frac] : m) sums[{a.stance, bucket}] += imp * frac;
  }
  res.rows = ToRows(sums, WeightKind::kImpressions);
  return res;
}

void WriteComment(csv::Writer& w, const std::string& comment) {
  if (comment.empty()) return;
  for (const auto& line : SplitString(comment, '\n')) w.Comment(line);
}

}  // namespace

std::vector<AggregateRow> ThemeDistribution(const std::vector<AnalysisAd>& ads, WeightKind kind,
                                            const std::vector<AnalysisAd>* all_ads) {
  std::map<Key, double> sums;
  for (const auto& a : ads) sums[{a.stance, a.theme_id}] += Weight(a.ad, kind);
  auto rows = ToRows(sums, kind);
  if (all_ads) {
    std::map<StanceLabel, double> totals;
    for (const auto& a : *all_ads) totals[a.stance] += Weight(a.ad, kind);
    for (auto& r : rows) {
      const double t = totals[r.stance];
      r.share_of_all = t > 0 ? r.value / t : 0.0;
    }
  }
  return rows;
}

DemoResult DemoDistribution(const std::vector<AnalysisAd>& ads, DemoAxis axis) {
  DemoResult res = ShareDistribution(ads, [axis](const AdRecord& ad) -> const ShareMap& {
    return AxisShares(ad, axis);
  });
  // Present buckets in their canonical order rather than lexicographically.
  const auto order = AxisBuckets(axis);
  auto pos = [&order](const std::string& b) {
    return static_cast<size_t>(std::find(order.begin(), order.end(), b) - order.begin());
  };
  std::stable_sort(res.rows.begin(), res.rows.end(), [&](const AggregateRow& x, const AggregateRow& y) {
    if (x.stance != y.stance) return x.stance < y.stance;
    return pos(x.group) < pos(y.group);
  });
  return res;
}

DemoResult GeoDistribution(const std::vector<AnalysisAd>& ads) {
  return ShareDistribution(ads, [](const AdRecord& ad) -> const ShareMap& { return ad.state_share; });
}

std::vector<FunderRank> TopFunders(const std::vector<AnalysisAd>& ads, size_t n, WeightKind by) {
  std::map<StanceLabel, std::map<std::string, double>> sums;
  for (const auto& a : ads) sums[a.stance][a.ad.funding_entity] += Weight(a.ad, by);
  std::vector<FunderRank> out;
  for (const auto& [stance, funders] : sums) {
    std::vector<std::pair<std::string, double>> v(funders.begin(), funders.end());
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
      if (x.second != y.second) return x.second > y.second;
      return x.first < y.first;
    });
    for (size_t i = 0; i < std::min(n, v.size()); ++i) {
      out.push_back({stance, static_cast<int>(i + 1), v[i].first, v[i].second});
    }
  }
  return out;
}

Matrix EntityThemeSpend(const std::vector<AnalysisAd>& ads, const std::vector<FundingEntity>& registry) {
  std::map<std::string, EntityType> types;
  for (const auto& e : registry) types[e.name] = e.entity_type;
  std::set<std::string> themes;
  for (const auto& a : ads) {
    if (a.stance == StanceLabel::kProEnergy) themes.insert(a.theme_id);
  }
  Matrix m;
  m.row_labels.assign(themes.begin(), themes.end());
  for (auto t : {EntityType::kCorporation, EntityType::kIndustryAssociation, EntityType::kAdvocacyGroup,
                 EntityType::kOther}) {
    m.col_labels.emplace_back(EntityTypeName(t));
  }
  m.values.assign(m.row_labels.size(), std::vector<double>(m.col_labels.size(), 0.0));
  for (const auto& a : ads) {
    if (a.stance != StanceLabel::kProEnergy) continue;
    auto it = types.find(a.ad.funding_entity);
    const EntityType t = it == types.end() ? EntityType::kOther : it->second;
    const size_t r = static_cast<size_t>(
        std::lower_bound(m.row_labels.begin(), m.row_labels.end(), a.theme_id) - m.row_labels.begin());
    m.values[r][static_cast<size_t>(t)] += a.ad.SpendMid();
  }
  return m;
}

std::vector<TokenCount> ThemeTokenFrequencies(const std::vector<AnalysisAd>& ads, size_t top_n) {
  static const std::set<std::string> kSkip = {
      "a",    "an",   "and", "are", "as",   "at",   "be",   "by",   "for",  "from", "has", "have",
      "in",   "is",   "it",  "its", "of",   "on",   "or",   "our",  "that", "the",  "their",
      "this", "to",   "we",  "was", "were", "will", "with", "you",  "your", "s",    "t"};
  std::map<std::string, std::map<std::string, size_t>> counts;
  for (const auto& a : ads) {
    for (const auto& tok : Tokenize(a.ad.body)) {
      if (!kSkip.count(tok)) ++counts[a.theme_id][tok];
    }
  }
  std::vector<TokenCount> out;
  for (const auto& [theme, tc] : counts) {
    std::vector<std::pair<std::string, size_t>> v(tc.begin(), tc.end());
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
      if (x.second != y.second) return x.second > y.second;
      return x.first < y.first;
    });
    for (size_t i = 0; i < std::min(top_n, v.size()); ++i) out.push_back({theme, v[i].first, v[i].second});
  }
  return out;
}

metrics::ContingencyTable DemoStanceTable(const std::vector<AnalysisAd>& ads, DemoAxis axis,
                                          CountMode mode) {
  metrics::ContingencyTable t;
  t.row_labels = AxisBuckets(axis);
  t.col_labels = {std::string(StanceName(StanceLabel::kProEnergy)),
                  std::string(StanceName(StanceLabel::kCleanEnergy))};
  t.counts.assign(t.row_labels.size(), std::vector<double>(2, 0.0));
  for (const auto& a : ads) {
    size_t col;
    if (a.stance == StanceLabel::kProEnergy) {
      col = 0;
    } else if (a.stance == StanceLabel::kCleanEnergy) {
      col = 1;
    } else {
      continue;
    }
    const ShareMap& m = AxisShares(a.ad, axis);
    if (m.empty()) continue;
    if (mode == CountMode::kImpressions) {
      for (size_t r = 0; r < t.row_labels.size(); ++r) {
        auto it = m.find(t.row_labels[r]);
        if (it != m.end()) t.counts[r][col] += a.ad.ImpressionsMid() * it->second;
      }
    } else {
      size_t best = 0;
      double best_share = -1;
      for (size_t r = 0; r < t.row_labels.size(); ++r) {
        auto it = m.find(t.row_labels[r]);
        const double s = it == m.end() ? 0.0 : it->second;
        if (s > best_share) {
          best_share = s;
          best = r;
        }
      }
      t.counts[best][col] += 1.0;
    }
  }
  return t;
}

std::string AggregateCsv(const std::vector<AggregateRow>& rows, const std::string& comment) {
  csv::Writer w;
  WriteComment(w, comment);
  bool with_all = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.share_of_all.has_value(); });
  std::vector<std::string> header = {"group", "stance", "weight_kind", "value", "share"};
  if (with_all) header.push_back("share_of_all_labeled");
  w.WriteRow(header);
  for (const auto& r : rows) {
    std::vector<std::string> row = {r.group, std::string(StanceName(r.stance)),
                                    std::string(WeightKindName(r.weight)), FormatDouble(r.value),
                                    FormatDouble(r.share)};
    if (with_all) row.push_back(r.share_of_all ? FormatDouble(*r.share_of_all) : "");
    w.WriteRow(row);
  }
  return w.str();
}

std::string FunderCsv(const std::vector<FunderRank>& rows, const std::string& comment) {
  csv::Writer w;
  WriteComment(w, comment);
  w.WriteRow({"stance", "rank", "funder", "value"});
  for (const auto& r : rows) {
    w.WriteRow({std::string(StanceName(r.stance)), std::to_string(r.rank), r.funder, FormatDouble(r.value)});
  }
  return w.str();
}

std::string MatrixCsv(const Matrix& m, const std::string& corner, const std::string& comment) {
  csv::Writer w;
  WriteComment(w, comment);
  std::vector<std::string> header = {corner};
  header.insert(header.end(), m.col_labels.begin(), m.col_labels.end());
  w.WriteRow(header);
  for (size_t r = 0; r < m.row_labels.size(); ++r) {
    std::vector<std::string> row = {m.row_labels[r]};
    for (double v : m.values[r]) row.push_back(FormatDouble(v));
    w.WriteRow(row);
  }
  return w.str();
}

std::string TokenCsv(const std::vector<TokenCount>& rows, const std::string& comment) {
  csv::Writer w;
  WriteComment(w, comment);
  w.WriteRow({"theme_id", "token", "count"});
  for (const auto& r : rows) w.WriteRow({r.theme_id, r.token, std::to_string(r.count)});
  return w.str();
}

}  // namespace climsoup::analytics
