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

#include "climsoup/embedder.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "climsoup/common.h"

namespace climsoup {

using nn::ParamSet;
using nn::Tensor2;

nn::ParamSet InitEncoderParams(size_t vocab_size, size_t dim, uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("encoder dim must be at least 2");
  if (vocab_size < 3) throw std::invalid_argument("vocabulary too small");
  Rng rng(DeriveSeed(seed, "encoder-init"));
  Tensor2 emb(vocab_size, dim), w(dim, dim);
  for (double& v : emb.values()) v = rng.Uniform(-0.05, 0.05);
  for (double& v : w.values()) v = rng.Uniform(-0.05, 0.05);
  ParamSet p;
  p.Add(kEmbedding, std::move(emb));
  p.Add(kProjW, std::move(w));
  p.Add(kProjB, Tensor2(1, dim));
  return p;
}

size_t EncoderDim(const nn::ParamSet& params) { return params.at(kProjW).cols(); }

EncodeTrace EncodeForward(const nn::ParamSet& params, const std::vector<int>& ids) {
  if (ids.empty()) throw DataError("cannot encode an empty token sequence");
  const Tensor2& emb = params.at(kEmbedding);
  const size_t d = emb.cols();
  Tensor2 tokens(ids.size(), d);
  for (size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<size_t>(id) >= emb.rows()) {
      throw std::invalid_argument(fmt::format("token id {} outside embedding table", id));
    }
    std::copy_n(emb.row(static_cast<size_t>(id)).begin(), d, tokens.row(i).begin());
  }
  EncodeTrace t;
  t.ids = ids;
  t.pooled = nn::MeanPool(tokens, std::vector<bool>(ids.size(), true));
  t.hidden = nn::TanhForward(nn::LinearForward(t.pooled, params.at(kProjW), params.at(kProjB)));
  double sq = 0;
  for (double v : t.hidden.values()) sq += v * v;
  t.norm = std::sqrt(sq);
  if (!(t.norm > 0) || !std::isfinite(t.norm)) {
    throw NumericError("encoder output has zero or non-finite norm");
  }
  t.unit = t.hidden;
  for (double& v : t.unit.values()) v /= t.norm;
  return t;
}

void EncodeBackward(const nn::ParamSet& params, const EncodeTrace& trace, const nn::Tensor2& dunit,
                    nn::ParamSet& grads) {
  const size_t d = trace.unit.cols();
  // d(h/|h|) = (I - u u^T) / |h|
  double dot = 0;
  for (size_t j = 0; j < d; ++j) dot += trace.unit(0, j) * dunit(0, j);
  Tensor2 dhidden(1, d);
  for (size_t j = 0; j < d; ++j) {
    dhidden(0, j) = (dunit(0, j) - trace.unit(0, j) * dot) / trace.norm;
  }
  Tensor2 dz = nn::TanhBackward(trace.hidden, dhidden);
  nn::LinearGrads lg = nn::LinearBackward(trace.pooled, params.at(kProjW), dz);
  auto& gw = grads.at(kProjW).values();
  for (size_t k = 0; k < gw.size(); ++k) gw[k] += lg.dw.values()[k];
  auto& gb = grads.at(kProjB).values();
  for (size_t k = 0; k < gb.size(); ++k) gb[k] += lg.db.values()[k];
  Tensor2 dtokens = nn::MeanPoolBackward(lg.dx, std::vector<bool>(trace.ids.size(), true));
  Tensor2& gemb = grads.at(kEmbedding);
  for (size_t i = 0; i < trace.ids.size(); ++i) {
    auto dst = gemb.row(static_cast<size_t>(trace.ids[i]));
    auto src = dtokens.row(i);
    for (size_t j = 0; j < d; ++j) dst[j] += src[j];
  }
}

std::vector<double> Encode(std::string_view text, const Vocabulary& vocab,
                           const nn::ParamSet& params) {
  auto ids = vocab.Encode(text);
  if (ids.empty()) throw DataError("text has no tokens to encode");
  return EncodeForward(params, ids).unit.values();
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("Cosine: length mismatch");
  double ab = 0, aa = 0, bb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) throw NumericError("Cosine: zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

namespace {

struct Normalized {
  Tensor2 unit;
  std::vector<double> norms;
};

Normalized NormalizeRows(const Tensor2& x) {
  Normalized n{x, std::vector<double>(x.rows())};
  for (size_t i = 0; i < x.rows(); ++i) {
    auto r = n.unit.row(i);
    double sq = 0;
    for (double v : r) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 0)) throw NumericError("MnrlLoss: zero-norm row");
    for (double& v : r) v /= norm;
    n.norms[i] = norm;
  }
  return n;
}

// Back-propagates through row normalization.
Tensor2 NormalizeRowsBackward(const Normalized& n, const Tensor2& dunit) {
  Tensor2 dx(dunit.rows(), dunit.cols());
  for (size_t i = 0; i < dunit.rows(); ++i) {
    auto u = n.unit.row(i);
    auto du = dunit.row(i);
    double dot = 0;
    for (size_t j = 0; j < u.size(); ++j) dot += u[j] * du[j];
    auto out = dx.row(i);
    for (size_t j = 0; j < u.size(); ++j) out[j] = (du[j] - u[j] * dot) / n.norms[i];
  }
  return dx;
}

}  // namespace

MnrlResult MnrlLoss(const nn::Tensor2& anchors, const nn::Tensor2& positives, double scale) {
  if (!anchors.SameShape(positives)) throw std::invalid_argument("MnrlLoss: shape mismatch");
  const size_t n = anchors.rows();
  if (n < 2) throw std::invalid_argument("MnrlLoss needs at least 2 pairs for in-batch negatives");
  if (!anchors.AllFinite() || !positives.AllFinite()) throw NumericError("MnrlLoss: non-finite input");
  const Normalized a = NormalizeRows(anchors);
  const Normalized p = NormalizeRows(positives);
  Tensor2 scores(n, n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      double dot = 0;
      for (size_t k = 0; k < anchors.cols(); ++k) dot += a.unit(i, k) * p.unit(j, k);
      scores(i, j) = scale * dot;
    }
  }
  std::vector<int> labels(n);
  std::iota(labels.begin(), labels.end(), 0);
  nn::LossAndGrad ce = nn::SoftmaxCrossEntropy(scores, labels);
  const size_t d = anchors.cols();
  Tensor2 da_unit(n, d), dp_unit(n, d);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      const double g = scale * ce.grad(i, j);
      if (g == 0.0) continue;
      for (size_t k = 0; k < d; ++k) {
        da_unit(i, k) += g * p.unit(j, k);
        dp_unit(j, k) += g * a.unit(i, k);
      }
    }
  }
  return {ce.loss, NormalizeRowsBackward(a, da_unit), NormalizeRowsBackward(p, dp_unit)};
}

std::vector<std::string> FallbackSummary(std::string_view body) {
  auto sentences = SplitSentences(body);
  std::string lead;
  for (size_t i = 0; i < sentences.size() && i < kFallbackSentences; ++i) {
    if (i) lead.push_back(' ');
    lead += sentences[i];
  }
  auto tokens = Tokenize(lead);
  if (tokens.size() > kFallbackMaxTokens) tokens.resize(kFallbackMaxTokens);
  return tokens;
}

std::vector<TrainPair> MakePairs(const Corpus& corpus) {
  std::vector<TrainPair> pairs;
  for (const auto& ad : corpus) {
    TrainPair p;
    p.anchor = Tokenize(ad.body);
    p.positive = ad.description ? Tokenize(*ad.description) : FallbackSummary(ad.body);
    if (p.anchor.empty() || p.positive.empty() || p.anchor == p.positive) continue;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

namespace {

struct EncodedPairs {
  std::vector<std::vector<int>> anchors, positives;
};

EncodedPairs EncodePairs(const std::vector<TrainPair>& pairs, const Vocabulary& vocab) {
  EncodedPairs e;
  for (const auto& p : pairs) {
    e.anchors.push_back(vocab.EncodeTokens(p.anchor));
    e.positives.push_back(vocab.EncodeTokens(p.positive));
  }
  return e;
}

struct BatchOutcome {
  double loss = 0;
  ParamSet grads;
};

BatchOutcome RunBatch(const ParamSet& params, const EncodedPairs& data,
                      const std::vector<size_t>& idx, double scale, bool want_grads) {
  const size_t n = idx.size();
  const size_t d = EncoderDim(params);
  std::vector<EncodeTrace> ta, tp;
  Tensor2 a(n, d), p(n, d);
  for (size_t i = 0; i < n; ++i) {
    ta.push_back(EncodeForward(params, data.anchors[idx[i]]));
    tp.push_back(EncodeForward(params, data.positives[idx[i]]));
    std::copy_n(ta.back().unit.values().begin(), d, a.row(i).begin());
    std::copy_n(tp.back().unit.values().begin(), d, p.row(i).begin());
  }
  MnrlResult r = MnrlLoss(a, p, scale);
  BatchOutcome out{r.loss, {}};
  if (!want_grads) return out;
  out.grads = params.ZerosLike();
  for (size_t i = 0; i < n; ++i) {
    Tensor2 da(1, d, std::vector<double>(r.d_anchors.row(i).begin(), r.d_anchors.row(i).end()));
    Tensor2 dp(1, d, std::vector<double>(r.d_positives.row(i).begin(), r.d_positives.row(i).end()));
    EncodeBackward(params, ta[i], da, out.grads);
    EncodeBackward(params, tp[i], dp, out.grads);
  }
  return out;
}

// Consecutive batches; a trailing batch of one pair has no negatives and is
// folded into its predecessor.
std::vector<std::vector<size_t>> MakeBatches(const std::vector<size_t>& order, size_t batch) {
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < order.size(); start += batch) {
    size_t end = std::min(order.size(), start + batch);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() > 1 && batches.back().size() < 2) {
    auto last = batches.back();
    batches.pop_back();
    batches.back().insert(batches.back().end(), last.begin(), last.end());
  }
  return batches;
}

double FixedBatchLoss(const ParamSet& params, const EncodedPairs& data, size_t batch, double scale) {
  std::vector<size_t> order(data.anchors.size());
  std::iota(order.begin(), order.end(), 0);
  double total = 0;
  auto batches = MakeBatches(order, batch);
  for (const auto& b : batches) total += RunBatch(params, data, b, scale, false).loss;
  return total / static_cast<double>(batches.size());
}

}  // namespace

double MeanPositiveRank(const nn::ParamSet& params, const Vocabulary& vocab,
                        const std::vector<TrainPair>& pairs, int batch) {
  EncodedPairs data = EncodePairs(pairs, vocab);
  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  double rank_sum = 0;
  size_t count = 0;
  for (const auto& b : MakeBatches(order, static_cast<size_t>(std::max(batch, 2)))) {
    std::vector<std::vector<double>> a, p;
    for (size_t i : b) {
      a.push_back(EncodeForward(params, data.anchors[i]).unit.values());
      p.push_back(EncodeForward(params, data.positives[i]).unit.values());
    }
    for (size_t i = 0; i < b.size(); ++i) {
      const double own = Cosine(a[i], p[i]);
      size_t rank = 1;
      for (size_t j = 0; j < b.size(); ++j) {
        if (j != i && Cosine(a[i], p[j]) > own) ++rank;
      }
      rank_sum += static_cast<double>(rank);
      ++count;
    }
  }
  return count ? rank_sum / static_cast<double>(count) : 0.0;
}

ContrastiveResult TrainContrastive(const std::vector<TrainPair>& pairs, const Vocabulary& vocab,
                                   const ContrastiveConfig& config) {
  if (pairs.size() < 2) throw DataError("contrastive training needs at least 2 pairs");
  if (config.batch < 2) throw UsageError("contrastive batch size must be at least 2");
  ContrastiveResult result;
  size_t batch = static_cast<size_t>(config.batch);
  if (batch > pairs.size()) {
    std::string msg = fmt::format("batch size {} exceeds {} pairs; clamped", batch, pairs.size());
    spdlog::warn(msg);
    result.warnings.push_back(std::move(msg));
    batch = pairs.size();
  }
  EncodedPairs data = EncodePairs(pairs, vocab);
  ParamSet params = InitEncoderParams(vocab.size(), config.dim, config.seed);
  nn::AdamState adam = nn::AdamState::For(params, {.lr = config.lr});
  Rng shuffle_rng(DeriveSeed(config.seed, "contrastive-shuffle"));

  result.initial_loss = FixedBatchLoss(params, data, batch, config.scale);
  result.mean_rank.push_back(MeanPositiveRank(params, vocab, pairs, static_cast<int>(batch)));
  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.Shuffle(order);
    double loss_sum = 0;
    auto batches = MakeBatches(order, batch);
    for (const auto& b : batches) {
      BatchOutcome o = RunBatch(params, data, b, config.scale, true);
      if (!std::isfinite(o.loss)) {
        throw NumericError(fmt::format("contrastive loss diverged at epoch {}", epoch + 1));
      }
      nn::AdamStep(params, o.grads, adam);
      loss_sum += o.loss;
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(batches.size()));
    result.mean_rank.push_back(MeanPositiveRank(params, vocab, pairs, static_cast<int>(batch)));
    spdlog::debug("contrastive epoch {}: loss {:.6f}", epoch + 1, result.epoch_losses.back());
  }

  Checkpoint& ck = result.checkpoint;
  ck.id = "encoder";
  ck.kind = "encoder";
  ck.shared_init_id = "enc-" + ParamDigest(params);
  ck.meta["dim"] = config.dim;
  ck.meta["vocab_size"] = vocab.size();
  ck.meta["vocab_digest"] = vocab.Digest();
  ck.meta["epochs"] = config.epochs;
  ck.meta["batch"] = batch;
  ck.meta["lr"] = config.lr;
  ck.meta["scale"] = config.scale;
  ck.meta["seed"] = config.seed;
  ck.meta["pairs"] = pairs.size();
  ck.params = std::move(params);
  return result;
}

}  // namespace climsoup
