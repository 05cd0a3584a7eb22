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

#include "climsoup/metrics.h"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "climsoup/common.h"

namespace climsoup::metrics {

namespace {

void CheckLabels(std::span<const int> pred, std::span<const int> gold) {
  if (pred.size() != gold.size()) throw std::invalid_argument("metrics: pred/gold length mismatch");
  if (gold.empty()) throw std::invalid_argument("metrics: empty inputs");
}

}  // namespace

double Accuracy(std::span<const int> pred, std::span<const int> gold) {
  CheckLabels(pred, gold);
  size_t hits = 0;
  for (size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

ClassificationReport Evaluate(std::span<const int> pred, std::span<const int> gold, int num_classes) {
  CheckLabels(pred, gold);
  if (num_classes < 1) throw std::invalid_argument("metrics: num_classes must be positive");
  const auto k = static_cast<size_t>(num_classes);
  std::vector<size_t> tp(k), fp(k), fn(k), support(k);
  for (size_t i = 0; i < pred.size(); ++i) {
    const int g = gold[i], p = pred[i];
    if (g < 0 || g >= num_classes) throw std::invalid_argument("metrics: gold label out of range");
    if (p < 0 || p >= num_classes) throw std::invalid_argument("metrics: predicted label out of range");
    ++support[static_cast<size_t>(g)];
    if (p == g) {
      ++tp[static_cast<size_t>(g)];
    } else {
      ++fp[static_cast<size_t>(p)];
      ++fn[static_cast<size_t>(g)];
    }
  }
  ClassificationReport r;
  r.accuracy = Accuracy(pred, gold);
  double f1_sum = 0;
  for (size_t c = 0; c < k; ++c) {
    ClassScores s;
    s.support = support[c];
    bool zero_div = false;
    const double pp = static_cast<double>(tp[c] + fp[c]);
    const double ap = static_cast<double>(tp[c] + fn[c]);
    if (pp > 0) s.precision = static_cast<double>(tp[c]) / pp; else zero_div = true;
    if (ap > 0) s.recall = static_cast<double>(tp[c]) / ap; else zero_div = true;
    if (s.precision + s.recall > 0) {
      s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
    } else {
      zero_div = true;
    }
    if (zero_div) r.zero_division.push_back(static_cast<int>(c));
    f1_sum += s.f1;
    r.per_class.push_back(s);
  }
  r.macro_f1 = f1_sum / static_cast<double>(k);
  return r;
}

double MacroF1(std::span<const int> pred, std::span<const int> gold, int num_classes) {
  return Evaluate(pred, gold, num_classes).macro_f1;
}

nlohmann::ordered_json ReportToJson(const ClassificationReport& report,
                                    const std::vector<std::string>& class_names) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["macro_f1"] = report.macro_f1;
  j["per_class"] = nlohmann::ordered_json::object();
  for (size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& s = report.per_class[c];
    std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
    j["per_class"][name] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
                            {"support", s.support}};
  }
  j["zero_division"] = nlohmann::ordered_json::array();
  for (int c : report.zero_division) {
    j["zero_division"].push_back(static_cast<size_t>(c) < class_names.size()
                                     ? class_names[static_cast<size_t>(c)]
                                     : std::to_string(c));
  }
  j["zero_division_policy"] = "0";
  return j;
}

ContingencyTable DropEmpty(const ContingencyTable& table) {
  const size_t r = table.rows(), c = table.cols();
  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  for (size_t i = 0; i < r; ++i) {
    for (size_t j = 0; j < c; ++j) {
      row_sum[i] += table.counts[i][j];
      col_sum[j] += table.counts[i][j];
    }
  }
  ContingencyTable out;
  std::vector<size_t> keep_cols;
  for (size_t j = 0; j < c; ++j) {
    if (col_sum[j] > 0) {
      keep_cols.push_back(j);
      if (j < table.col_labels.size()) out.col_labels.push_back(table.col_labels[j]);
    }
  }
  for (size_t i = 0; i < r; ++i) {
    if (!(row_sum[i] > 0)) continue;
    if (i < table.row_labels.size()) out.row_labels.push_back(table.row_labels[i]);
    std::vector<double> row;
    for (size_t j : keep_cols) row.push_back(table.counts[i][j]);
    out.counts.push_back(std::move(row));
  }
  return out;
}

ChiSquareResult ChiSquare(const ContingencyTable& table) {
  const size_t r = table.rows(), c = table.cols();
  if (r < 2 || c < 2) throw DataError("chi-square needs at least a 2x2 table");
  for (const auto& row : table.counts) {
    if (row.size() != c) throw DataError("chi-square table is ragged");
    for (double v : row) {
      if (!std::isfinite(v) || v < 0) throw DataError("chi-square counts must be finite and non-negative");
    }
  }
  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double total = 0;
  ChiSquareResult res;
  for (size_t i = 0; i < r; ++i) {
    for (size_t j = 0; j < c; ++j) {
      const double v = table.counts[i][j];
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
      if (v != std::floor(v)) res.fractional = true;
    }
  }
  for (size_t i = 0; i < r; ++i) {
    if (!(row_sum[i] > 0)) throw DataError("chi-square table has an all-zero row");
  }
  for (size_t j = 0; j < c; ++j) {
    if (!(col_sum[j] > 0)) throw DataError("chi-square table has an all-zero column");
  }
  for (size_t i = 0; i < r; ++i) {
    for (size_t j = 0; j < c; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double diff = table.counts[i][j] - expected;
      res.statistic += diff * diff / expected;
    }
  }
  res.df = static_cast<int>((r - 1) * (c - 1));
  res.p_value = Chi2Sf(res.statistic, res.df);
  return res;
}

double Chi2Sf(double x, int df) {
  if (df < 1) throw std::invalid_argument("Chi2Sf: df must be positive");
  if (std::isnan(x) || x < 0) throw std::invalid_argument("Chi2Sf: x must be non-negative");
  if (x == 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

nlohmann::ordered_json ChiSquareToJson(const ChiSquareResult& r, double alpha) {
  nlohmann::ordered_json j;
  j["statistic"] = r.statistic;
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  j["significant_at_0.05"] = r.p_value < alpha;
  j["fractional_counts"] = r.fractional;
  return j;
}

}  // namespace climsoup::metrics
