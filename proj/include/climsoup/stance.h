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

#ifndef CLIMSOUP_STANCE_H_
#define CLIMSOUP_STANCE_H_

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "climsoup/checkpoint.h"
#include "climsoup/corpus.h"
#include "climsoup/nncore.h"
#include "climsoup/themes.h"
#include "climsoup/tokenizer.h"

namespace climsoup {

inline constexpr const char* kHeadW1 = "head_w1";
inline constexpr const char* kHeadB1 = "head_b1";
inline constexpr const char* kHeadW2 = "head_w2";
inline constexpr const char* kHeadB2 = "head_b2";
inline constexpr size_t kDefaultHidden = 32;

// theme token + [SEP] + body tokens, at most kMaxSeqLen long. The theme
// prefix comes first so truncation only ever cuts the body. Without a
// theme the sequence is the body alone.
std::vector<std::string> ComposeInput(std::string_view body, const std::optional<std::string>& theme_id);

struct StanceExample {
  std::string ad_id;
  std::vector<int> ids;
  int label = -1;  // StanceLabel index, -1 when unknown
  std::string theme_id;
};

// `themes` maps ad id -> theme id; pass nullptr for the text-only ablation.
std::vector<StanceExample> MakeExamples(const std::vector<LabeledAd>& ads, const Vocabulary& vocab,
                                        const std::map<std::string, std::string>* themes);

// Xavier-uniform head (d -> hidden -> 3) with zero biases.
nn::ParamSet InitHead(size_t dim, size_t hidden, uint64_t seed);

// Seed for the head: a function of the shared init and the config seed
// only, so every sweep member starts from the same head.
uint64_t HeadSeed(const std::string& shared_init_id, uint64_t hyper_seed);

struct BatchLoss {
  double loss = 0;
  nn::ParamSet grads;
};

// Mean cross-entropy of the encoder+head model over `batch` with exact
// gradients for every tensor.
BatchLoss StanceLossAndGrad(const nn::ParamSet& params, const std::vector<StanceExample>& examples,
                            const std::vector<size_t>& batch);
double StanceLoss(const nn::ParamSet& params, const std::vector<StanceExample>& examples,
                  const std::vector<size_t>& batch);

struct Prediction {
  StanceLabel label = StanceLabel::kNeutral;
  std::array<double, kNumStances> probs{};
};

// Throws DataError when the parameters do not match the vocabulary or
// lack the stance head.
void CheckStanceSchema(const nn::ParamSet& params, const Vocabulary& vocab);

std::vector<Prediction> Predict(const nn::ParamSet& params, const std::vector<StanceExample>& examples);
double EvalAccuracy(const nn::ParamSet& params, const std::vector<StanceExample>& examples);

struct FinetuneOptions {
  size_t hidden = kDefaultHidden;
};

// Trains encoder and head end to end with softmax cross-entropy and Adam
// (decoupled weight decay), no early stopping. Validation accuracy is
// measured once after the last epoch.
Checkpoint Finetune(const Checkpoint& init, const std::vector<StanceExample>& train,
                    const std::vector<StanceExample>& val, const HyperConfig& hyper,
                    FinetuneOptions options = {});

// The ten (learning rate, weight decay) pairs of the reference sweep, in
// order Hyper1..Hyper10, with epochs=10 and batch=32.
std::vector<HyperConfig> DefaultGrid(uint64_t seed = 0);

// One checkpoint per config, ids "hyper01", "hyper02", ...
std::vector<Checkpoint> Sweep(const Checkpoint& init, const std::vector<StanceExample>& train,
                              const std::vector<StanceExample>& val,
                              const std::vector<HyperConfig>& grid, FinetuneOptions options = {});

// ad_id,predicted_stance,p_pro,p_clean,p_neutral,theme_id
std::string SerializePredictions(const std::vector<StanceExample>& examples,
                                 const std::vector<Prediction>& predictions,
                                 const std::string& comment = {});

struct PredictionRow {
  std::string ad_id;
  StanceLabel predicted;
  std::array<double, kNumStances> probs{};
  std::string theme_id;
};
std::vector<PredictionRow> ParsePredictions(std::string_view csv_text);

// ---------------------------------------------------------------------------
// Logistic regression over tf-idf features.

struct TfidfOptions {
  int max_iter = 5000;
  double grad_tol = 1e-6;
  double step = 1.0;
  // Inverse L2 strength; the penalty on the mean loss is 1 / (C * N).
  double c = 1.0;
};

struct TfidfModel {
  std::map<std::string, size_t> terms;
  std::vector<double> idf;
  nn::Tensor2 weights;  // V x 3
  nn::Tensor2 bias;     // 1 x 3
  int iterations = 0;
  double final_grad_norm = 0;
};

// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
double SmoothedIdf(size_t n_docs, size_t doc_freq);

// Throws DataError when the training data holds a single class.
TfidfModel TrainTfidfLr(const std::vector<std::string>& docs, const std::vector<int>& labels,
                        TfidfOptions options = {});
std::vector<Prediction> PredictTfidf(const TfidfModel& model, const std::vector<std::string>& docs);

}  // namespace climsoup

#endif  // CLIMSOUP_STANCE_H_
