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

#ifndef CLIMSOUP_SYNTH_H_
#define CLIMSOUP_SYNTH_H_

#include <map>
#include <string>
#include <vector>

#include "climsoup/corpus.h"
#include "climsoup/themes.h"

namespace climsoup {

// Knobs for the generated ad library. Stances are carried by the funder;
// ad text draws from per-stance word pools with `noise` probability of a
// word from another stance's pool, and pro/clean ads embed one phrase of a
// theme on their side.
struct SynthConfig {
  size_t n_funders = 48;
  size_t n_ads = 2400;
  double noise = 0.1;
  double description_rate = 0.6;
  double offtopic_rate = 0.02;
  double missing_share_rate = 0.03;
  size_t unregistered_funders = 3;
  size_t annotated = 300;  // ads with a gold theme label
  uint64_t seed = 0;
};

struct SynthCorpus {
  Corpus corpus;
  std::vector<FundingEntity> registry;
  std::map<std::string, std::string> annotations;  // ad id -> theme id, sampled
  std::map<std::string, std::string> true_theme;   // every themed ad
};

// Deterministic in (config, bank).
SynthCorpus GenerateSynthetic(const SynthConfig& config, const PhraseBank& bank);

}  // namespace climsoup

#endif  // CLIMSOUP_SYNTH_H_
