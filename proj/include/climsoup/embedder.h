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

#ifndef CLIMSOUP_EMBEDDER_H_
#define CLIMSOUP_EMBEDDER_H_

#include <string>
#include <vector>

#include "climsoup/checkpoint.h"
#include "climsoup/corpus.h"
#include "climsoup/nncore.h"
#include "climsoup/tokenizer.h"

namespace climsoup {

// Tensor names shared by encoder and stance checkpoints.
inline constexpr const char* kEmbedding = "embedding";
inline constexpr const char* kProjW = "proj_w";
inline constexpr const char* kProjB = "proj_b";

inline constexpr double kDefaultSimilarityScale = 20.0;
inline constexpr size_t kFallbackSentences = 2;
inline constexpr size_t kFallbackMaxTokens = 30;

// Embedding table (V x d), projection (d x d) and bias (1 x d), all drawn
// from uniform(-0.05, 0.05) except the zero bias.
nn::ParamSet InitEncoderParams(size_t vocab_size, size_t dim, uint64_t seed);

size_t EncoderDim(const nn::ParamSet& params);

// Forward state for one sequence, kept for the backward pass.
struct EncodeTrace {
  std::vector<int> ids;
  nn::Tensor2 pooled;  // 1 x d mean of token embeddings
  nn::Tensor2 hidden;  // 1 x d tanh(pooled W + b)
  double norm = 0;     // ||hidden||
  nn::Tensor2 unit;    // hidden / norm
};

// embed -> mean-pool -> linear -> tanh -> L2 normalize.
EncodeTrace EncodeForward(const nn::ParamSet& params, const std::vector<int>& ids);
// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(unit).
void EncodeBackward(const nn::ParamSet& params, const EncodeTrace& trace, const nn::Tensor2& dunit,
                    nn::ParamSet& grads);

// Unit-norm sentence vector. Throws DataError if `text` has no tokens.
std::vector<double> Encode(std::string_view text, const Vocabulary& vocab,
                           const nn::ParamSet& params);

double Cosine(std::span<const double> a, std::span<const double> b);

struct MnrlResult {
  double loss = 0;
  nn::Tensor2 d_anchors;
  nn::Tensor2 d_positives;
};

// Multiple-negatives ranking loss with in-batch negatives:
//   -(1/N) sum_i log softmax_j(scale * cos(a_i, p_j))[i].
// Cosines are computed from the given rows, so gradients include the
// normalization Jacobian. Requires N >= 2.
MnrlResult MnrlLoss(const nn::Tensor2& anchors, const nn::Tensor2& positives,
                    double scale = kDefaultSimilarityScale);

struct TrainPair {
  std::vector<std::string> anchor;
  std::vector<std::string> positive;
};

// First two sentences of the body, capped at 30 tokens.
std::vector<std::string> FallbackSummary(std::string_view body);

// (body, description) when the description exists, else (body, fallback).
// Pairs whose two sides are token-identical are dropped.
std::vector<TrainPair> MakePairs(const Corpus& corpus);

struct ContrastiveConfig {
  size_t dim = 64;
  int epochs = 5;
  int batch = 32;
  double lr = 1e-3;
  double scale = kDefaultSimilarityScale;
  uint64_t seed = 0;
};

struct ContrastiveResult {
  Checkpoint checkpoint;
  double initial_loss = 0;            // over fixed batches, before training
  std::vector<double> epoch_losses;   // mean training batch loss per epoch
  std::vector<double> mean_rank;      // [0] before training, then per epoch
  std::vector<std::string> warnings;
};

// Mean 1-based rank of each true positive among its batch's positives, by
// cosine to the anchor, over consecutive batches of `batch` pairs.
double MeanPositiveRank(const nn::ParamSet& params, const Vocabulary& vocab,
                        const std::vector<TrainPair>& pairs, int batch);

// Siamese training with shared weights; Adam without weight decay. The
// checkpoint's shared_init_id is derived from its parameters.
ContrastiveResult TrainContrastive(const std::vector<TrainPair>& pairs, const Vocabulary& vocab,
                                   const ContrastiveConfig& config);

}  // namespace climsoup

#endif  // CLIMSOUP_EMBEDDER_H_
