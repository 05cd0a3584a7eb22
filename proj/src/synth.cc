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

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "climsoup/common.h"

namespace climsoup {

namespace {

// Word pools. Each stance's pool carries at least one filter keyword so
// that every on-topic ad survives keyword filtering.
const std::vector<std::string> kPool[kNumStances] = {
    // pro_energy
    {"oil", "gas", "natural gas", "drilling", "pipeline", "petroleum", "refinery", "coal", "fracking",
     "affordable", "reliable", "paychecks", "production", "barrels", "wells", "shale", "royalties",
     "landowners", "roughnecks", "independence", "domestic", "lease", "crude", "rigs", "permits"},
    // clean_energy
    {"solar", "wind", "renewable", "clean energy", "climate change", "emissions", "pollution", "planet",
     "wildlife", "heat pumps", "batteries", "turbines", "conservation", "sustainable", "greenhouse",
     "carbon", "ocean", "forest", "rooftop", "electric", "warming", "habitat", "glaciers", "justice",
     "grid"},
    // neutral
    {"energy", "power", "bills", "utility", "meeting", "savings", "rebate", "efficiency", "weatherize",
     "program", "enroll", "customers", "outage", "service", "insulation", "thermostat", "appointment",
     "hotline", "assistance", "account", "meter", "billing", "workshop", "seniors", "residents"},
};

const std::vector<std::string> kAnchorKeywords[kNumStances] = {
    {"oil", "gas", "coal", "drilling", "petroleum", "fracking"},
    {"solar", "renewable", "climate change", "clean energy", "pollution", "carbon"},
    {"energy", "power"},
};

const std::vector<std::string> kFiller = {
    "we", "the", "for", "our", "families", "today", "community", "county", "support", "learn", "more",
    "about", "together", "neighbors", "local", "now", "every", "state", "town", "people", "help", "join"};

const std::vector<std::string> kOffTopic = {
    "sale", "boots", "jackets", "weekend", "store", "discount", "coffee", "bakery", "music", "festival",
    "tickets", "book", "club", "shoes", "pizza", "garden", "yoga", "concert"};

const std::vector<std::string> kAdjectives = {
    "Prairie", "Coastal", "Summit", "Liberty", "Heartland", "Pioneer", "Granite", "Evergreen",
    "Frontier", "Harbor", "Cascade", "Keystone", "Sunbelt", "Riverbend", "Northern", "Lone Star"};
const std::vector<std::string> kNouns = {"Energy", "Future", "Power", "Families", "Works", "Alliance"};
const std::vector<std::string> kOrgSuffix = {"Corp", "Council", "Action Fund", "Partners"};

const std::vector<std::string> kStates = {"TX", "CA", "PA", "OH", "NY", "FL",
                                          "CO", "NM", "ND", "WA", "MI", "IL"};
// Per-stance state preference weights, aligned with kStates.
const std::vector<double> kStateWeights[kNumStances] = {
    {6, 1, 3, 3, 1, 2, 1, 2, 3, 1, 1, 1},
    {1, 6, 1, 1, 3, 2, 3, 1, 1, 3, 2, 2},
    {2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2},
};

const std::vector<double> kGenderBase[kNumStances] = {
    {0.62, 0.34, 0.04}, {0.40, 0.56, 0.04}, {0.50, 0.46, 0.04}};
const std::vector<double> kAgeBase[kNumStances] = {
    {0.04, 0.08, 0.10, 0.14, 0.22, 0.40, 0.02},
    {0.14, 0.30, 0.20, 0.14, 0.10, 0.10, 0.02},
    {0.10, 0.16, 0.16, 0.18, 0.18, 0.20, 0.02}};

const std::vector<std::pair<double, double>> kSpendRanges = {
    {0, 99}, {100, 499}, {500, 999}, {1000, 4999}, {5000, 9999}, {10000, 49999}, {50000, 99999}};
const std::vector<std::pair<double, double>> kImpressionRanges = {
    {0, 999},         {1000, 4999},     {5000, 9999},     {10000, 49999},
    {50000, 99999},   {100000, 199999}, {200000, 499999}, {500000, 999999}};

const std::string& Pick(Rng& rng, const std::vector<std::string>& v) { return v[rng.UniformInt(v.size())]; }

size_t PickWeighted(Rng& rng, const std::vector<double>& w) {
  double total = 0;
  for (double x : w) total += x;
  double u = rng.Uniform01() * total;
  for (size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  return w.size() - 1;
}

// Rounds jittered proportions to 4 decimals and puts the rounding residue
// on the largest bucket so the shares sum to 1.
ShareMap JitterShares(Rng& rng, const std::vector<std::string>& buckets, const std::vector<double>& base,
                      double jitter) {
  std::vector<double> w(base.size());
  double total = 0;
  for (size_t i = 0; i < base.size(); ++i) {
    w[i] = std::max(0.0, base[i] * (1.0 + rng.Uniform(-jitter, jitter)));
    total += w[i];
  }
  double sum = 0;
  size_t biggest = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = std::round(w[i] / total * 1e4) / 1e4;
    sum += w[i];
    if (w[i] > w[biggest]) biggest = i;
  }
  w[biggest] = std::round((w[biggest] + 1.0 - sum) * 1e4) / 1e4;
  ShareMap m;
  for (size_t i = 0; i < w.size(); ++i) m[buckets[i]] = w[i];
  return m;
}

std::string Capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

struct FunderSpec {
  std::string name;
  StanceLabel stance;
  EntityType type;
  std::vector<std::string> favorites;  // funder-specific slice of the stance pool
  double volume = 1;
};

class SentenceMaker {
 public:
  SentenceMaker(Rng& rng, double noise) : rng_(rng), noise_(noise) {}

  std::string PoolWord(const FunderSpec& f) {
    int s = static_cast<int>(f.stance);
    if (rng_.Uniform01() < noise_) {
      s = (s + 1 + static_cast<int>(rng_.UniformInt(kNumStances - 1))) % kNumStances;
      return Pick(rng_, kPool[s]);
    }
    if (rng_.Uniform01() < 0.6) return Pick(rng_, f.favorites);
    return Pick(rng_, kPool[s]);
  }

  std::string Sentence(const FunderSpec& f, bool anchor) {
    std::vector<std::string> words;
    const size_t n = 5 + rng_.UniformInt(5);
    const size_t content = 2 + rng_.UniformInt(3);
    for (size_t i = 0; i < n; ++i) words.push_back(Pick(rng_, kFiller));
    for (size_t i = 0; i < content; ++i) {
      words[rng_.UniformInt(words.size())] = PoolWord(f);
    }
    if (anchor) words[rng_.UniformInt(words.size())] = Pick(rng_, kAnchorKeywords[static_cast<int>(f.stance)]);
    std::string out = Capitalize(words[0]);
    for (size_t i = 1; i < words.size(); ++i) out += " " + words[i];
    return out + ".";
  }

  std::string OffTopic() {
    std::string out = Capitalize(Pick(rng_, kOffTopic));
    const size_t n = 4 + rng_.UniformInt(4);
    for (size_t i = 0; i < n; ++i) out += " " + Pick(rng_, rng_.Uniform01() < 0.5 ? kOffTopic : kFiller);
    return out + ".";
  }

 private:
  Rng& rng_;
  double noise_;
};

}  // namespace

SynthCorpus GenerateSynthetic(const SynthConfig& config, const PhraseBank& bank) {
  if (config.n_funders < 5) throw UsageError("synthetic corpus needs at least 5 funders");
  if (config.n_ads < config.n_funders) throw UsageError("synthetic corpus needs at least one ad per funder");
  if (config.n_funders > kAdjectives.size() * kNouns.size()) throw UsageError("too many synthetic funders");
  Rng rng(DeriveSeed(config.seed, "synth"));

  std::vector<size_t> themes_by_side[2];
  for (size_t i = 0; i < bank.size(); ++i) themes_by_side[bank[i].side == ThemeSide::kPro ? 0 : 1].push_back(i);
  if (themes_by_side[0].empty() || themes_by_side[1].empty()) {
    throw DataError("synthetic corpus needs pro and clean themes in the bank");
  }

  // Funders: 40% pro, 40% clean, 20% neutral, then unregistered extras.
  std::vector<FunderSpec> funders;
  const size_t total_funders = config.n_funders + config.unregistered_funders;
  for (size_t i = 0; i < total_funders; ++i) {
    FunderSpec f;
    const size_t slot = i % 5;
    f.stance = slot < 2 ? StanceLabel::kProEnergy : slot < 4 ? StanceLabel::kCleanEnergy : StanceLabel::kNeutral;
    f.type = static_cast<EntityType>(rng.UniformInt(4));
    f.name = fmt::format("{} {} {}", kAdjectives[i % kAdjectives.size()],
                         kNouns[(i / kAdjectives.size()) % kNouns.size()],
                         kOrgSuffix[static_cast<size_t>(f.type)]);
    std::vector<std::string> pool = kPool[static_cast<int>(f.stance)];
    rng.Shuffle(pool);
    f.favorites.assign(pool.begin(), pool.begin() + 8);
    const double u = rng.Uniform(0.5, 2.0);
    f.volume = i >= config.n_funders ? 0.15 : u * u;
    funders.push_back(std::move(f));
  }

  // Every funder gets a few ads; the rest follow the volume weights.
  std::vector<size_t> owner;
  const size_t min_per = std::min<size_t>(5, config.n_ads / total_funders);
  for (size_t i = 0; i < total_funders; ++i) owner.insert(owner.end(), min_per, i);
  std::vector<double> volumes;
  for (const auto& f : funders) volumes.push_back(f.volume);
  while (owner.size() < config.n_ads) owner.push_back(PickWeighted(rng, volumes));
  rng.Shuffle(owner);

  SynthCorpus out;
  SentenceMaker maker(rng, config.noise);
  const std::vector<std::string> genders(kGenderBuckets.begin(), kGenderBuckets.end());
  const std::vector<std::string> ages(kAgeBuckets.begin(), kAgeBuckets.end());
  std::vector<std::string> themed_ids;
  for (size_t a = 0; a < config.n_ads; ++a) {
    const FunderSpec& f = funders[owner[a]];
    const int s = static_cast<int>(f.stance);
    AdRecord ad;
    ad.id = fmt::format("ad{:05d}", a + 1);
    ad.funding_entity = f.name;
    const bool offtopic = rng.Uniform01() < config.offtopic_rate;
    std::vector<std::string> sentences;
    std::string theme_phrase;
    if (offtopic) {
      const size_t n = 2 + rng.UniformInt(2);
      for (size_t i = 0; i < n; ++i) sentences.push_back(maker.OffTopic());
    } else {
      const size_t n = 2 + rng.UniformInt(3);
      for (size_t i = 0; i < n; ++i) sentences.push_back(maker.Sentence(f, i == 0));
      if (f.stance != StanceLabel::kNeutral) {
        const auto& side = themes_by_side[f.stance == StanceLabel::kProEnergy ? 0 : 1];
        const Theme& theme = bank[side[rng.UniformInt(side.size())]];
        theme_phrase = theme.phrases[rng.UniformInt(theme.phrases.size())];
        std::string sentence = theme_phrase;
        if (!sentence.empty() && std::string(".!?").find(sentence.back()) == std::string::npos) sentence += ".";
        sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(rng.UniformInt(sentences.size() + 1)),
                         sentence);
        out.true_theme[ad.id] = theme.id;
        themed_ids.push_back(ad.id);
      }
    }
    ad.body = sentences[0];
    for (size_t i = 1; i < sentences.size(); ++i) ad.body += " " + sentences[i];
    if (rng.Uniform01() < 0.5) ad.title = f.name;
    if (!offtopic && rng.Uniform01() < config.description_rate) {
      // A short summary that reuses words of the body.
      std::string desc = theme_phrase.empty() ? maker.Sentence(f, true) : theme_phrase + ".";
      if (rng.Uniform01() < 0.5) desc += " " + maker.Sentence(f, false);
      ad.description = desc;
    }

    const size_t shift = f.stance == StanceLabel::kProEnergy ? 2 : f.stance == StanceLabel::kCleanEnergy ? 1 : 0;
    const size_t si = std::min(kSpendRanges.size() - 1, shift + rng.UniformInt(5));
    ad.spend_lower = kSpendRanges[si].first;
    ad.spend_upper = kSpendRanges[si].second;
    const size_t ii = std::min(kImpressionRanges.size() - 1, si + rng.UniformInt(3));
    ad.impressions_lower = kImpressionRanges[ii].first;
    ad.impressions_upper = kImpressionRanges[ii].second;

    if (rng.Uniform01() >= config.missing_share_rate) {
      ad.gender_share = JitterShares(rng, genders, kGenderBase[s], 0.15);
      ad.age_share = JitterShares(rng, ages, kAgeBase[s], 0.2);
      const size_t k = 3 + rng.UniformInt(3);
      std::vector<double> w = kStateWeights[s];
      std::vector<std::string> picked;
      std::vector<double> base;
      for (size_t i = 0; i < k; ++i) {
        const size_t j = PickWeighted(rng, w);
        picked.push_back(kStates[j]);
        base.push_back(kStateWeights[s][j]);
        w[j] = 0;
      }
      ad.state_share = JitterShares(rng, picked, base, 0.3);
    }
    if (auto err = ValidateRecord(ad)) throw std::logic_error("synthetic ad invalid: " + *err);
    out.corpus.push_back(std::move(ad));
  }

  for (size_t i = 0; i < config.n_funders; ++i) {
    FundingEntity e;
    e.name = funders[i].name;
    e.stance = funders[i].stance;
    e.entity_type = funders[i].type;
    out.registry.push_back(e);
  }
  std::sort(out.registry.begin(), out.registry.end(),
            [](const FundingEntity& x, const FundingEntity& y) { return x.name < y.name; });

  // Gold theme labels for a random sample of on-topic themed ads.
  rng.Shuffle(themed_ids);
  themed_ids.resize(std::min(themed_ids.size(), config.annotated));
  for (const auto& id : themed_ids) out.annotations[id] = out.true_theme.at(id);
  return out;
}

}  // namespace climsoup
