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

#include "climsoup/synth.h"

#include <set>

#include <gtest/gtest.h>

#include "climsoup/analytics.h"
#include "climsoup/common.h"
#include "climsoup/metrics.h"

namespace climsoup {
namespace {

PhraseBank Bank() { return LoadPhraseBank(CLIMSOUP_DATA_DIR "/themes.json"); }

SynthConfig Small(uint64_t seed) {
  SynthConfig c;
  c.n_funders = 20;
  c.n_ads = 600;
  c.annotated = 100;
  c.seed = seed;
  return c;
}

TEST(Synth, DeterministicInSeed) {
  PhraseBank bank = Bank();
  auto a = GenerateSynthetic(Small(1), bank), b = GenerateSynthetic(Small(1), bank);
  EXPECT_EQ(SerializeJsonl(a.corpus), SerializeJsonl(b.corpus));
  EXPECT_EQ(a.annotations, b.annotations);
  EXPECT_NE(SerializeJsonl(GenerateSynthetic(Small(2), bank).corpus), SerializeJsonl(a.corpus));
}

TEST(Synth, ShapeOfTheLibrary) {
  PhraseBank bank = Bank();
  SynthCorpus s = GenerateSynthetic(Small(3), bank);
  EXPECT_EQ(s.corpus.size(), 600u);
  EXPECT_EQ(s.registry.size(), 20u);
  EXPECT_EQ(s.annotations.size(), 100u);

  std::set<std::string> registered, funders;
  for (const auto& e : s.registry) registered.insert(e.name);
  for (const auto& ad : s.corpus) funders.insert(ad.funding_entity);
  EXPECT_EQ(funders.size(), 23u);  // three unregistered extras
  size_t outside = 0;
  for (const auto& f : funders) outside += registered.count(f) ? 0 : 1;
  EXPECT_EQ(outside, 3u);

  // Ingestion accepts every generated record.
  IngestResult r = IngestText(SerializeJsonl(s.corpus), CorpusFormat::kJsonl);
  EXPECT_EQ(r.corpus.size(), 600u);
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Synth, ThemedAdsCarryTheirPhrase) {
  PhraseBank bank = Bank();
  SynthCorpus s = GenerateSynthetic(Small(4), bank);
  std::map<std::string, const Theme*> by_id;
  for (const auto& t : bank) by_id[t.id] = &t;
  std::map<std::string, std::string> bodies;
  for (const auto& ad : s.corpus) bodies[ad.id] = ToLowerAscii(ad.body);
  for (const auto& [id, theme] : s.true_theme) {
    bool found = false;
    for (const auto& p : by_id.at(theme)->phrases) found |= bodies[id].find(ToLowerAscii(p)) != std::string::npos;
    EXPECT_TRUE(found) << id;
  }
  for (const auto& [id, theme] : s.annotations) EXPECT_EQ(s.true_theme.at(id), theme);
}

TEST(Synth, GenderSkewIsDetectable) {
  PhraseBank bank = Bank();
  SynthCorpus s = GenerateSynthetic(Small(5), bank);
  LabeledCorpus lc = PropagateStance(s.corpus, s.registry);
  std::vector<analytics::AnalysisAd> ads;
  for (const auto& la : lc.labeled) ads.push_back({la.ad, la.stance, ""});
  auto table = metrics::DropEmpty(
      analytics::DemoStanceTable(ads, analytics::DemoAxis::kGender, analytics::CountMode::kAdCount));
  EXPECT_LT(metrics::ChiSquare(table).p_value, 0.05);
}

}  // namespace
}  // namespace climsoup
