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

#ifndef CLIMSOUP_PIPELINE_H_
#define CLIMSOUP_PIPELINE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "climsoup/analytics.h"
#include "climsoup/checkpoint.h"
#include "climsoup/corpus.h"
#include "climsoup/embedder.h"

namespace climsoup {

struct GridPoint {
  double learning_rate = 0;
  double weight_decay = 0;
};

// Everything one pipeline run depends on. Relative paths resolve against
// the directory holding the config file.
struct RunConfig {
  std::filesystem::path corpus;
  CorpusFormat corpus_format = CorpusFormat::kJsonl;
  std::filesystem::path registry;
  std::filesystem::path themes;
  std::filesystem::path keywords;
  std::optional<std::filesystem::path> annotations;
  std::filesystem::path workdir;

  uint64_t seed = 0;
  SplitOptions split;
  size_t vocab_max = 20000;
  ContrastiveConfig embedder;

  std::vector<GridPoint> grid;  // empty = the default ten-point grid
  int sweep_epochs = 10;
  int sweep_batch = 32;
  // Multiplies every grid learning rate. The reference grid was tuned for
  // a pretrained transformer; a small encoder trained from scratch needs
  // larger steps.
  double lr_scale = 1.0;
  size_t hidden = 32;

  double baseline_c = 1.0;
  int baseline_max_iter = 5000;

  bool theme_ablation = false;
  bool strict_greedy = false;
  analytics::WeightKind weight_kind = analytics::WeightKind::kSpend;
  analytics::CountMode contingency_mode = analytics::CountMode::kImpressions;
  std::string analysis_model = "uniform_soup";

  // Canonical JSON of the parsed values (input paths as written, workdir
  // left out) and its hash.
  nlohmann::json canonical;
  std::string hash;
};

// Parses JSON config text. `base_dir` anchors relative paths.
RunConfig ParseRunConfig(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig LoadRunConfig(const std::filesystem::path& path);

// The (lr * lr_scale, wd) grid with the sweep settings applied.
std::vector<HyperConfig> EffectiveGrid(const RunConfig& config);

struct ModelScore {
  std::string id;
  double accuracy = 0;
  double macro_f1 = 0;
  std::optional<double> val_accuracy;
};

struct EvalSummary {
  std::vector<ModelScore> sweep;  // in sweep order
  ModelScore uniform_soup;
  ModelScore greedy_soup;
  ModelScore baseline;
};

// Stages share a workdir laid out as {corpus, splits, checkpoints, soups,
// reports}. Each stage checks its upstream manifests, writes its outputs
// and then its own manifest; outputs carry the config hash and seed.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  void Ingest();
  void Split();
  void TrainEmbed();
  void AssignThemes();
  void Sweep();
  void Soup();
  EvalSummary Eval();
  void Analyze();
  EvalSummary RunAll();

  const RunConfig& config() const { return config_; }
  std::filesystem::path Dir(std::string_view sub) const { return config_.workdir / sub; }

  // Stage names in execution order.
  static const std::vector<std::string>& StageNames();
  // Paths of every file a stage writes, relative to the workdir.
  std::vector<std::filesystem::path> StageOutputs(std::string_view stage) const;

 private:
  nlohmann::ordered_json Meta() const;
  std::string CsvStamp() const;
  void WriteManifest(std::string_view stage, nlohmann::ordered_json body,
                     const std::vector<std::string>& outputs) const;
  nlohmann::ordered_json RequireStage(std::string_view stage) const;

  RunConfig config_;
};

}  // namespace climsoup

#endif  // CLIMSOUP_PIPELINE_H_
