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

#include "climsoup/stance.h"

#include <cmath>

#include <gtest/gtest.h>

#include "climsoup/common.h"
#include "climsoup/embedder.h"

namespace climsoup {
namespace {

using Tokens = std::vector<std::string>;

TEST(ComposeInput, ThemePrefixThenSeparator) {
  EXPECT_EQ(ComposeInput("Gas Jobs matter", std::string("ENERGY_JOBS")),
            (Tokens{"energy_jobs", "[SEP]", "gas", "jobs", "matter"}));
  EXPECT_EQ(ComposeInput("Gas Jobs matter", std::nullopt), (Tokens{"gas", "jobs", "matter"}));
}

TEST(ComposeInput, TruncationCutsOnlyTheBody) {
  std::string body;
  for (int i = 0; i < 200; ++i) body += "word" + std::to_string(i) + " ";
  Tokens t = ComposeInput(body, std::string("T"));
  ASSERT_EQ(t.size(), kMaxSeqLen);
  EXPECT_EQ(t[0], "t");
  EXPECT_EQ(t[1], "[SEP]");
  EXPECT_EQ(t.back(), "word107");
  EXPECT_EQ(ComposeInput(body, std::nullopt).size(), kMaxSeqLen);
}

LabeledAd Ad(const std::string& id, const std::string& body, StanceLabel s) {
  LabeledAd la;
  la.ad.id = id;
  la.ad.body = body;
  la.stance = s;
  return la;
}

TEST(MakeExamples, RequiresThemesUnlessAblated) {
  std::vector<LabeledAd> ads = {Ad("a", "gas jobs", StanceLabel::kProEnergy)};
  Vocabulary vocab = Vocabulary::Build({"gas jobs"}, 100, {"t1"});
  std::map<std::string, std::string> themes = {{"a", "T1"}};
  auto ex = MakeExamples(ads, vocab, &themes);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].ids, (std::vector<int>{vocab.Id("t1"), Vocabulary::kSep, vocab.Id("gas"), vocab.Id("jobs")}));
  EXPECT_EQ(ex[0].label, 0);
  EXPECT_EQ(ex[0].theme_id, "T1");
  EXPECT_EQ(MakeExamples(ads, vocab, nullptr)[0].ids.size(), 2u);
  std::map<std::string, std::string> none;
  EXPECT_THROW(MakeExamples(ads, vocab, &none), DataError);
}

TEST(Head, SeedDependsOnSharedInitAndHyperSeedOnly) {
  EXPECT_EQ(HeadSeed("enc-1", 7), HeadSeed("enc-1", 7));
  EXPECT_NE(HeadSeed("enc-1", 7), HeadSeed("enc-2", 7));
  nn::ParamSet h = InitHead(8, 4, 3);
  EXPECT_EQ(h.at(kHeadW1).rows(), 8u);
  EXPECT_EQ(h.at(kHeadW2).cols(), 3u);
  // Xavier-uniform bound sqrt(6 / (fan_in + fan_out))
  const double bound = std::sqrt(6.0 / 12);
  for (double v : h.at(kHeadW1).values()) EXPECT_LE(std::abs(v), bound);
  for (double v : h.at(kHeadB1).values()) EXPECT_EQ(v, 0.0);
}

nn::ParamSet FullModel(size_t vocab, size_t dim, uint64_t seed) {
  nn::ParamSet p = InitEncoderParams(vocab, dim, seed);
  for (size_t i = 0; i < p.size(); ++i)
    for (double& v : p.tensor(i).values()) v *= 10;
  p.Append(InitHead(dim, 5, seed));
  return p;
}

TEST(StanceModel, FullGradientPassesGradCheck) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    nn::ParamSet p = FullModel(15, 6, seed);
    Rng rng(seed);
    std::vector<StanceExample> ex(4);
    for (size_t i = 0; i < ex.size(); ++i) {
      for (int k = 0; k < 3 + static_cast<int>(i); ++k) ex[i].ids.push_back(3 + static_cast<int>(rng.UniformInt(12)));
      ex[i].label = static_cast<int>(i % 3);
    }
    const std::vector<size_t> batch = {0, 1, 2, 3};
    BatchLoss bl = StanceLossAndGrad(p, ex, batch);
    EXPECT_DOUBLE_EQ(bl.loss, StanceLoss(p, ex, batch));
    auto r = nn::GradCheck(p, [&](const nn::ParamSet& q) { return StanceLoss(q, ex, batch); }, bl.grads);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst;
  }
}

// Three stances keyed by a single marker word inside shared filler text.
std::vector<StanceExample> SeparableSet(const Vocabulary& vocab, int n, uint64_t seed) {
  static const char* kMarkers[] = {"pipeline", "solar", "ballot"};
  static const char* kFiller[] = {"energy", "vote", "state", "future", "power", "homes"};
  Rng rng(seed);
  std::vector<LabeledAd> ads;
  for (int i = 0; i < n; ++i) {
    const int label = i % 3;
    std::string body = kMarkers[label];
    for (int k = 0; k < 4; ++k) body += std::string(" ") + kFiller[rng.UniformInt(6)];
    ads.push_back(Ad("ad" + std::to_string(i), body, static_cast<StanceLabel>(label)));
  }
  return MakeExamples(ads, vocab, nullptr);
}

TEST(Finetune, LearnsSeparableStances) {
  Vocabulary vocab = Vocabulary::Build({"pipeline solar ballot energy vote state future power homes"}, 100);
  Checkpoint init;
  init.kind = "encoder";
  init.params = InitEncoderParams(vocab.size(), 16, 1);
  init.shared_init_id = "enc-test";
  auto train = SeparableSet(vocab, 120, 1), val = SeparableSet(vocab, 60, 2);
  HyperConfig hyper{.learning_rate = 1e-2, .weight_decay = 0.01, .epochs = 10, .batch = 16, .seed = 3};
  Checkpoint ck = Finetune(init, train, val, hyper);
  ASSERT_TRUE(ck.val_accuracy.has_value());
  EXPECT_GE(*ck.val_accuracy, 0.9);
  EXPECT_DOUBLE_EQ(*ck.val_accuracy, EvalAccuracy(ck.params, val));
  EXPECT_EQ(ck.shared_init_id, "enc-test");
  EXPECT_EQ(ck.kind, "stance");
  ASSERT_EQ(ck.meta["epoch_losses"].size(), 10u);
  EXPECT_LT(ck.meta["epoch_losses"].back().get<double>(), ck.meta["epoch_losses"].front().get<double>());
  EXPECT_NO_THROW(CheckStanceSchema(ck.params, vocab));
  EXPECT_THROW(CheckStanceSchema(init.params, vocab), DataError);

  // Same seed, same everything: bit-identical.
  EXPECT_EQ(Finetune(init, train, val, hyper).params, ck.params);

  auto preds = Predict(ck.params, val);
  ASSERT_EQ(preds.size(), val.size());
  double s = 0;
  for (double p : preds[0].probs) s += p;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Finetune, SweepMembersShareTheirStartingHead) {
  Vocabulary vocab = Vocabulary::Build({"pipeline solar ballot energy vote state future power homes"}, 100);
  Checkpoint init;
  init.params = InitEncoderParams(vocab.size(), 8, 1);
  init.shared_init_id = "enc-x";
  auto train = SeparableSet(vocab, 30, 1);
  std::vector<HyperConfig> grid = {{.learning_rate = 1e-3, .weight_decay = 0, .epochs = 0, .batch = 8, .seed = 5},
                                   {.learning_rate = 1e-2, .weight_decay = 0.1, .epochs = 0, .batch = 8, .seed = 5}};
  auto cks = Sweep(init, train, train, grid);
  ASSERT_EQ(cks.size(), 2u);
  EXPECT_EQ(cks[0].id, "hyper01");
  EXPECT_EQ(cks[1].id, "hyper02");
  EXPECT_EQ(cks[0].params, cks[1].params);  // zero epochs: both are the shared init
}

TEST(Finetune, RejectsBadSettings) {
  Checkpoint init;
  init.params = InitEncoderParams(10, 4, 1);
  std::vector<StanceExample> one(1);
  one[0].ids = {3};
  one[0].label = 0;
  EXPECT_THROW(Finetune(init, {}, {}, {}), DataError);
  EXPECT_THROW(Finetune(init, one, one, {.learning_rate = 0}), UsageError);
  EXPECT_THROW(Finetune(init, one, one, {.learning_rate = 1e-3, .weight_decay = 0, .epochs = 1, .batch = 0}),
               UsageError);
}

TEST(DefaultGrid, TenConfigs) {
  auto grid = DefaultGrid(9);
  ASSERT_EQ(grid.size(), 10u);
  for (const auto& h : grid) {
    EXPECT_EQ(h.epochs, 10);
    EXPECT_EQ(h.batch, 32);
    EXPECT_EQ(h.seed, 9u);
  }
  EXPECT_DOUBLE_EQ(grid[0].learning_rate, 2e-5);
  EXPECT_DOUBLE_EQ(grid[0].weight_decay, 0.01);
}

TEST(Predictions, CsvRoundTrip) {
  std::vector<StanceExample> ex(2);
  ex[0].ad_id = "a1";
  ex[0].theme_id = "T1";
  ex[1].ad_id = "a2";
  std::vector<Prediction> preds(2);
  preds[0] = {StanceLabel::kCleanEnergy, {0.25, 0.5, 0.25}};
  preds[1] = {StanceLabel::kNeutral, {0.125, 0.125, 0.75}};
  auto rows = ParsePredictions(SerializePredictions(ex, preds, "model uniform_soup"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].predicted, StanceLabel::kCleanEnergy);
  EXPECT_EQ(rows[0].theme_id, "T1");
  EXPECT_DOUBLE_EQ(rows[1].probs[2], 0.75);
}

TEST(Tfidf, SmoothedIdfHandValues) {
  EXPECT_DOUBLE_EQ(SmoothedIdf(3, 3), 1.0);
  EXPECT_DOUBLE_EQ(SmoothedIdf(3, 1), std::log(2.0) + 1);
  EXPECT_DOUBLE_EQ(SmoothedIdf(0, 0), 1.0);
}

TEST(Tfidf, FitsSeparableDocs) {
  std::vector<std::string> docs;
  std::vector<int> labels;
  static const char* kMarkers[] = {"pipeline", "solar", "ballot"};
  for (int i = 0; i < 60; ++i) {
    docs.push_back(std::string(kMarkers[i % 3]) + " energy for our state");
    labels.push_back(i % 3);
  }
  TfidfModel m = TrainTfidfLr(docs, labels);
  EXPECT_EQ(m.terms.size(), 7u);
  ASSERT_EQ(m.idf.size(), 7u);
  // "energy" is in every doc
  EXPECT_DOUBLE_EQ(m.idf[m.terms.at("energy")], 1.0);
  EXPECT_DOUBLE_EQ(m.idf[m.terms.at("solar")], std::log(61.0 / 21.0) + 1);
  EXPECT_TRUE(m.iterations == 5000 || m.final_grad_norm < 1e-6);
  auto preds = PredictTfidf(m, {"solar energy", "ballot", "pipeline state"});
  EXPECT_EQ(preds[0].label, StanceLabel::kCleanEnergy);
  EXPECT_EQ(preds[1].label, StanceLabel::kNeutral);
  EXPECT_EQ(preds[2].label, StanceLabel::kProEnergy);
  // Unseen vocabulary gives the bias-only prediction, not an error.
  EXPECT_NO_THROW(PredictTfidf(m, {"zzz"}));
}

TEST(Tfidf, SingleClassIsRejected) {
  EXPECT_THROW(TrainTfidfLr({"a b", "c d"}, {1, 1}), DataError);
}

}  // namespace
}  // namespace climsoup
