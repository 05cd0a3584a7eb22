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

#include "climsoup/soup.h"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "climsoup/common.h"

namespace climsoup {

void CheckSoupable(const std::vector<Checkpoint>& checkpoints) {
  if (checkpoints.empty()) throw DataError("soup needs at least one checkpoint");
  const Checkpoint& first = checkpoints.front();
  for (const auto& ck : checkpoints) {
    if (ck.shared_init_id != first.shared_init_id) {
      throw DataError(fmt::format("mixed shared_init_id: '{}' has '{}', '{}' has '{}'", first.id,
                                  first.shared_init_id, ck.id, ck.shared_init_id));
    }
    if (!ck.params.SameSchema(first.params)) {
      throw DataError(fmt::format("schema mismatch between '{}' and '{}'", first.id, ck.id));
    }
  }
}

nn::ParamSet AverageParams(const std::vector<const nn::ParamSet*>& params) {
  if (params.empty()) throw std::invalid_argument("AverageParams: no inputs");
  nn::ParamSet out = *params.front();
  const double k = static_cast<double>(params.size());
  for (size_t t = 0; t < out.size(); ++t) {
    auto& dst = out.tensor(t).values();
    const auto& base = params.front()->tensor(t).values();
    std::vector<double> offset(dst.size(), 0.0);
    for (size_t j = 1; j < params.size(); ++j) {
      const auto& src = params[j]->tensor(t).values();
      for (size_t i = 0; i < dst.size(); ++i) offset[i] += src[i] - base[i];
    }
    for (size_t i = 0; i < dst.size(); ++i) dst[i] = base[i] + offset[i] / k;
  }
  return out;
}

namespace {

nn::ParamSet AverageOf(const std::vector<Checkpoint>& checkpoints, const std::vector<size_t>& members) {
  std::vector<const nn::ParamSet*> ptrs;
  for (size_t i : members) ptrs.push_back(&checkpoints[i].params);
  return AverageParams(ptrs);
}

Checkpoint SoupCheckpoint(const std::vector<Checkpoint>& checkpoints, const std::string& id,
                          nn::ParamSet params, const std::vector<std::string>& ingredients) {
  const Checkpoint& first = checkpoints.front();
  Checkpoint ck;
  ck.id = id;
  ck.kind = first.kind;
  ck.shared_init_id = first.shared_init_id;
  ck.params = std::move(params);
  ck.meta = first.meta;
  ck.meta.erase("epoch_losses");
  ck.meta["ingredients"] = ingredients;
  return ck;
}

}  // namespace

SoupResult UniformSoup(const std::vector<Checkpoint>& checkpoints) {
  CheckSoupable(checkpoints);
  std::vector<size_t> all(checkpoints.size());
  std::iota(all.begin(), all.end(), 0);
  SoupResult r;
  for (const auto& ck : checkpoints) r.ingredients.push_back(ck.id);
  r.soup = SoupCheckpoint(checkpoints, "uniform_soup", AverageOf(checkpoints, all), r.ingredients);
  return r;
}

SoupResult GreedySoup(const std::vector<Checkpoint>& checkpoints, const ValEval& val_eval,
                      GreedyOptions options) {
  CheckSoupable(checkpoints);
  for (const auto& ck : checkpoints) {
    if (!ck.val_accuracy) throw DataError("checkpoint '" + ck.id + "' has no recorded val_accuracy");
  }
  std::vector<size_t> order(checkpoints.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return *checkpoints[a].val_accuracy > *checkpoints[b].val_accuracy;
  });

  SoupResult r;
  std::vector<size_t> members = {order.front()};
  nn::ParamSet current = checkpoints[order.front()].params;
  double current_acc = val_eval(current);
  r.ingredients.push_back(checkpoints[order.front()].id);
  r.val_trace.push_back(current_acc);
  r.steps.push_back({checkpoints[order.front()].id, true, current_acc});

  for (size_t pos = 1; pos < order.size(); ++pos) {
    std::vector<size_t> tentative = members;
    tentative.push_back(order[pos]);
    nn::ParamSet candidate = AverageOf(checkpoints, tentative);
    const double acc = val_eval(candidate);
    const bool keep = options.strict ? acc > current_acc : acc >= current_acc;
    if (keep) {
      members = std::move(tentative);
      current = std::move(candidate);
      current_acc = acc;
      r.ingredients.push_back(checkpoints[order[pos]].id);
      r.val_trace.push_back(acc);
    }
    r.steps.push_back({checkpoints[order[pos]].id, keep, current_acc});
  }
  r.soup = SoupCheckpoint(checkpoints, "greedy_soup", std::move(current), r.ingredients);
  r.soup.val_accuracy = current_acc;
  r.soup.meta["strict"] = options.strict;
  return r;
}

nlohmann::ordered_json SoupTraceToJson(const SoupResult& result) {
  nlohmann::ordered_json j;
  j["order"] = nlohmann::ordered_json::array();
  j["accepted"] = nlohmann::ordered_json::array();
  j["val_accuracy_after"] = nlohmann::ordered_json::array();
  for (const auto& s : result.steps) {
    j["order"].push_back(s.id);
    j["accepted"].push_back(s.accepted);
    j["val_accuracy_after"].push_back(s.val_accuracy_after);
  }
  j["ingredients"] = result.ingredients;
  return j;
}

}  // namespace climsoup
