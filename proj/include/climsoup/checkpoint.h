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

#ifndef CLIMSOUP_CHECKPOINT_H_
#define CLIMSOUP_CHECKPOINT_H_

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "climsoup/nncore.h"

namespace climsoup {

// One point of the fine-tuning sweep grid.
struct HyperConfig {
  double learning_rate = 2e-5;
  double weight_decay = 0.01;
  int epochs = 10;
  int batch = 32;
  uint64_t seed = 0;

  bool operator==(const HyperConfig&) const = default;
};

nlohmann::ordered_json HyperToJson(const HyperConfig& h);
HyperConfig HyperFromJson(const nlohmann::json& j);

// A named parameter set plus the metadata souping needs.
struct Checkpoint {
  std::string id;              // e.g. "hyper03", "uniform_soup"
  std::string kind;            // "encoder" | "stance"
  nn::ParamSet params;
  std::string shared_init_id;  // common ancestor of every sweep member
  std::optional<HyperConfig> hyper;
  std::optional<double> val_accuracy;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  bool operator==(const Checkpoint& o) const {
    return id == o.id && kind == o.kind && params == o.params &&
           shared_init_id == o.shared_init_id && hyper == o.hyper &&
           val_accuracy == o.val_accuracy && meta == o.meta;
  }
};

// On disk a checkpoint is two files: `<stem>.json` (manifest: tensor names,
// shapes, byte offsets, shared_init_id, hyperparameters, val_accuracy) and
// `<stem>.bin` (tensors concatenated in manifest order as little-endian
// float64). Returns the manifest path.
std::filesystem::path SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& stem);

// Accepts either the stem or the manifest path. Throws DataError when a
// file is missing or the manifest does not describe the binary.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Hex digest of a ParamSet, covering tensor layout as well as values.
std::string ParamDigest(const nn::ParamSet& params);

}  // namespace climsoup

#endif  // CLIMSOUP_CHECKPOINT_H_
