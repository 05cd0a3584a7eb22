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

#ifndef CLIMSOUP_METRICS_H_
#define CLIMSOUP_METRICS_H_

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace climsoup::metrics {

double Accuracy(std::span<const int> pred, std::span<const int> gold);

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  size_t support = 0;
};

struct ClassificationReport {
  double accuracy = 0;
  double macro_f1 = 0;
  std::vector<ClassScores> per_class;
  // Classes where some per-class score hit 0/0 and was set to 0.
  std::vector<int> zero_division;
};

// Labels are class indices in [0, num_classes). Macro-F1 averages over all
// num_classes classes; any 0/0 resolves to 0.
ClassificationReport Evaluate(std::span<const int> pred, std::span<const int> gold, int num_classes);
double MacroF1(std::span<const int> pred, std::span<const int> gold, int num_classes);

// {accuracy, macro_f1, per_class: {name: {precision, recall, f1, support}},
// zero_division: [...]}
nlohmann::ordered_json ReportToJson(const ClassificationReport& report,
                                    const std::vector<std::string>& class_names);

struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> counts;  // [row][col]

  size_t rows() const { return counts.size(); }
  size_t cols() const { return counts.empty() ? 0 : counts.front().size(); }
};

// Removes rows and columns whose marginal is zero.
ContingencyTable DropEmpty(const ContingencyTable& table);

struct ChiSquareResult {
  double statistic = 0;
  int df = 0;
  double p_value = 1;
  bool fractional = false;  // some count is not an integer
};

// Pearson statistic sum (O - E)^2 / E with E = row * col / total, no
// continuity correction. Throws DataError on a malformed table or a zero
// marginal.
ChiSquareResult ChiSquare(const ContingencyTable& table);

// Survival function of the chi-square distribution, Q(df/2, x/2).
double Chi2Sf(double x, int df);

nlohmann::ordered_json ChiSquareToJson(const ChiSquareResult& r, double alpha = 0.05);

}  // namespace climsoup::metrics

#endif  // CLIMSOUP_METRICS_H_
