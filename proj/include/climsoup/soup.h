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

#ifndef CLIMSOUP_SOUP_H_
#define CLIMSOUP_SOUP_H_

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "climsoup/checkpoint.h"

namespace climsoup {

struct SoupStep {
  std::string id;
  bool accepted = false;
  double val_accuracy_after = 0;  // accuracy of the soup once this step is decided
};

struct SoupResult {
  Checkpoint soup;
  std::vector<std::string> ingredients;  // inclusion order
  std::vector<double> val_trace;         // accuracy after each accepted ingredient
  std::vector<SoupStep> steps;           // every candidate considered (greedy only)
};

// Throws DataError when the list is empty, the ingredients disagree on
// shared_init_id, or their tensor schemas differ.
void CheckSoupable(const std::vector<Checkpoint>& checkpoints);

// Coordinate-wise mean, computed as x0 + (sum_j (xj - x0)) / k with the
// offsets summed left to right. Anchoring on the first ingredient makes k
// copies of one model average back to that model exactly.
nn::ParamSet AverageParams(const std::vector<const nn::ParamSet*>& params);

SoupResult UniformSoup(const std::vector<Checkpoint>& checkpoints);

using ValEval = std::function<double(const nn::ParamSet&)>;

struct GreedyOptions {
  // Accept a candidate only when validation accuracy strictly improves.
  // The default keeps it when accuracy does not drop.
  bool strict = false;
};

// Sorts by recorded val_accuracy (descending, ties by list order), starts
// from the best checkpoint, and tentatively re-averages the full ingredient
// set with each further candidate, keeping it if `val_eval` does not
// degrade. Checkpoints must carry val_accuracy.
SoupResult GreedySoup(const std::vector<Checkpoint>& checkpoints, const ValEval& val_eval,
                      GreedyOptions options = {});

// {order, accepted, val_accuracy_after, ingredients}
nlohmann::ordered_json SoupTraceToJson(const SoupResult& result);

}  // namespace climsoup

#endif  // CLIMSOUP_SOUP_H_
