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

// Command-line driver for the stance pipeline. Each subcommand runs one
// stage against the workdir named in the config; `run` chains them all.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "climsoup/common.h"
#include "climsoup/csv.h"
#include "climsoup/pipeline.h"
#include "climsoup/synth.h"
#include "climsoup/themes.h"

#ifndef CLIMSOUP_DATA_DIR
#define CLIMSOUP_DATA_DIR "data"
#endif

namespace {

using climsoup::EvalSummary;
using climsoup::ModelScore;

void PrintSummary(const EvalSummary& s) {
  auto line = [](const ModelScore& m) {
    std::cout << fmt::format("{:<14} {:>8} {:>9.4f} {:>9.4f}\n", m.id,
                             m.val_accuracy ? fmt::format("{:.4f}", *m.val_accuracy) : "-", m.accuracy,
                             m.macro_f1);
  };
  std::cout << fmt::format("{:<14} {:>8} {:>9} {:>9}\n", "model", "val_acc", "test_acc", "macro_f1");
  for (const auto& m : s.sweep) line(m);
  line(s.uniform_soup);
  line(s.greedy_soup);
  line(s.baseline);
}

void WriteSynthetic(const std::filesystem::path& out, const climsoup::SynthConfig& cfg,
                    const std::filesystem::path& themes, const std::filesystem::path& keywords,
                    double lr_scale) {
  namespace fs = std::filesystem;
  const auto bank = climsoup::LoadPhraseBank(themes);
  climsoup::SynthCorpus synth = climsoup::GenerateSynthetic(cfg, bank);
  climsoup::WriteFile(out / "corpus.jsonl", climsoup::SerializeJsonl(synth.corpus));
  climsoup::WriteFile(out / "registry.csv", climsoup::SerializeRegistry(synth.registry));
  climsoup::csv::Writer ann;
  ann.WriteRow({"ad_id", "theme_id"});
  for (const auto& [id, theme] : synth.annotations) ann.WriteRow({id, theme});
  climsoup::WriteFile(out / "annotations.csv", ann.str());
  climsoup::WriteFile(out / "themes.json", climsoup::ReadFile(themes));
  climsoup::WriteFile(out / "keywords.txt", climsoup::ReadFile(keywords));
  nlohmann::ordered_json config;
  config["paths"] = {{"corpus", "corpus.jsonl"}, {"registry", "registry.csv"}, {"themes", "themes.json"},
                     {"keywords", "keywords.txt"}, {"annotations", "annotations.csv"}, {"workdir", "work"}};
  config["seed"] = cfg.seed;
  config["sweep"] = {{"grid", "default"}, {"lr_scale", lr_scale}};
  climsoup::WriteFile(out / "config.json", config.dump(2) + "\n");
  spdlog::info("synth: wrote {} ads from {} funders to {}", synth.corpus.size(), synth.registry.size(),
               out.string());
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("climsoup");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Stance detection and model soups for climate-related ads"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string config_path;
  std::map<std::string, CLI::App*> stages;
  for (const auto& name : climsoup::Pipeline::StageNames()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
    sub->add_option("-c,--config", config_path, "Run config (JSON)")->required();
    stages[name] = sub;
  }
  auto* run = app.add_subcommand("run", "Run every stage in order");
  run->add_option("-c,--config", config_path, "Run config (JSON)")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic ad library with a ready config");
  std::string synth_out;
  climsoup::SynthConfig synth_cfg;
  std::string themes_path = std::string(CLIMSOUP_DATA_DIR) + "/themes.json";
  std::string keywords_path = std::string(CLIMSOUP_DATA_DIR) + "/keywords.txt";
  double lr_scale = 100.0;
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--ads", synth_cfg.n_ads, "Number of ads")->capture_default_str();
  synth->add_option("--funders", synth_cfg.n_funders, "Number of registered funders")->capture_default_str();
  synth->add_option("--noise", synth_cfg.noise, "Cross-stance word rate")->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed, "Generator seed")->capture_default_str();
  synth->add_option("--themes", themes_path, "Phrase bank")->capture_default_str();
  synth->add_option("--keywords", keywords_path, "Keyword list")->capture_default_str();
  synth->add_option("--lr-scale", lr_scale, "lr_scale written to the config")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (synth->parsed()) {
      WriteSynthetic(synth_out, synth_cfg, themes_path, keywords_path, lr_scale);
      return 0;
    }
    climsoup::Pipeline pipeline(climsoup::LoadRunConfig(config_path));
    if (run->parsed()) {
      PrintSummary(pipeline.RunAll());
      return 0;
    }
    if (stages["ingest"]->parsed()) pipeline.Ingest();
    if (stages["split"]->parsed()) pipeline.Split();
    if (stages["train-embed"]->parsed()) pipeline.TrainEmbed();
    if (stages["assign-themes"]->parsed()) pipeline.AssignThemes();
    if (stages["sweep"]->parsed()) pipeline.Sweep();
    if (stages["soup"]->parsed()) pipeline.Soup();
    if (stages["eval"]->parsed()) PrintSummary(pipeline.Eval());
    if (stages["analyze"]->parsed()) pipeline.Analyze();
  } catch (const climsoup::UsageError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const climsoup::DataError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const climsoup::NumericError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
