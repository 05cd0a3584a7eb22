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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "climsoup/common.h"
#include "climsoup/csv.h"
#include "climsoup/embedder.h"

namespace climsoup {

using nn::ParamSet;
using nn::Tensor2;

std::vector<std::string> ComposeInput(std::string_view body, const std::optional<std::string>& theme_id) {
  std::vector<std::string> out;
  if (theme_id) {
    out.push_back(ToLowerAscii(*theme_id));
    out.emplace_back(Vocabulary::kSepToken);
  }
  for (auto& tok : Tokenize(body)) {
    if (out.size() >= kMaxSeqLen) break;
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<StanceExample> MakeExamples(const std::vector<LabeledAd>& ads, const Vocabulary& vocab,
                                        const std::map<std::string, std::string>* themes) {
  std::vector<StanceExample> out;
  out.reserve(ads.size());
  for (const auto& la : ads) {
    StanceExample ex;
    ex.ad_id = la.ad.id;
    ex.label = static_cast<int>(la.stance);
    std::optional<std::string> theme;
    if (themes) {
      auto it = themes->find(la.ad.id);
      if (it == themes->end()) throw DataError("ad '" + la.ad.id + "' has no theme assignment");
      theme = it->second;
      ex.theme_id = it->second;
    }
    ex.ids = vocab.EncodeTokens(ComposeInput(la.ad.body, theme));
    if (ex.ids.empty()) throw DataError("ad '" + la.ad.id + "' has no tokens");
    out.push_back(std::move(ex));
  }
  return out;
}

nn::ParamSet InitHead(size_t dim, size_t hidden, uint64_t seed) {
  if (dim == 0 || hidden == 0) throw std::invalid_argument("InitHead: zero dimension");
  Rng rng(DeriveSeed(seed, "stance-head"));
  auto xavier = [&rng](size_t fan_in, size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor2 w(fan_in, fan_out);
    for (double& v : w.values()) v = rng.Uniform(-a, a);
    return w;
  };
  ParamSet p;
  p.Add(kHeadW1, xavier(dim, hidden));
  p.Add(kHeadB1, Tensor2(1, hidden));
  p.Add(kHeadW2, xavier(hidden, kNumStances));
  p.Add(kHeadB2, Tensor2(1, kNumStances));
  return p;
}

uint64_t HeadSeed(const std::string& shared_init_id, uint64_t hyper_seed) {
  return DeriveSeed(hyper_seed, "head:" + shared_init_id);
}

namespace {

struct ForwardState {
  std::vector<EncodeTrace> traces;
  Tensor2 u;       // B x d
  Tensor2 h1;      // B x hidden
  Tensor2 logits;  // B x 3
};

ForwardState Forward(const ParamSet& params, const std::vector<StanceExample>& examples,
                     const std::vector<size_t>& batch) {
  const size_t d = EncoderDim(params);
  ForwardState s;
  s.u = Tensor2(batch.size(), d);
  s.traces.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    s.traces.push_back(EncodeForward(params, examples.at(batch[i]).ids));
    std::copy_n(s.traces.back().unit.values().begin(), d, s.u.row(i).begin());
  }
  s.h1 = nn::TanhForward(nn::LinearForward(s.u, params.at(kHeadW1), params.at(kHeadB1)));
  s.logits = nn::LinearForward(s.h1, params.at(kHeadW2), params.at(kHeadB2));
  return s;
}

std::vector<int> BatchLabels(const std::vector<StanceExample>& examples, const std::vector<size_t>& batch) {
  std::vector<int> labels;
  labels.reserve(batch.size());
  for (size_t i : batch) {
    const int y = examples.at(i).label;
    if (y < 0 || y >= kNumStances) throw DataError("example '" + examples[i].ad_id + "' has no label");
    labels.push_back(y);
  }
  return labels;
}

void AddInto(Tensor2& dst, const Tensor2& src) {
  auto& d = dst.values();
  const auto& s = src.values();
  for (size_t k = 0; k < d.size(); ++k) d[k] += s[k];
}

std::vector<size_t> AllIndices(size_t n) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

BatchLoss StanceLossAndGrad(const nn::ParamSet& params, const std::vector<StanceExample>& examples,
                            const std::vector<size_t>& batch) {
  if (batch.empty()) throw std::invalid_argument("StanceLossAndGrad: empty batch");
  ForwardState s = Forward(params, examples, batch);
  const auto labels = BatchLabels(examples, batch);
  nn::LossAndGrad ce = nn::SoftmaxCrossEntropy(s.logits, labels);

  BatchLoss out{ce.loss, params.ZerosLike()};
  nn::LinearGrads g2 = nn::LinearBackward(s.h1, params.at(kHeadW2), ce.grad);
  AddInto(out.grads.at(kHeadW2), g2.dw);
  AddInto(out.grads.at(kHeadB2), g2.db);
  Tensor2 dz1 = nn::TanhBackward(s.h1, g2.dx);
  nn::LinearGrads g1 = nn::LinearBackward(s.u, params.at(kHeadW1), dz1);
  AddInto(out.grads.at(kHeadW1), g1.dw);
  AddInto(out.grads.at(kHeadB1), g1.db);
  const size_t d = s.u.cols();
  for (size_t i = 0; i < batch.size(); ++i) {
    Tensor2 du(1, d, std::vector<double>(g1.dx.row(i).begin(), g1.dx.row(i).end()));
    EncodeBackward(params, s.traces[i], du, out.grads);
  }
  return out;
}

double StanceLoss(const nn::ParamSet& params, const std::vector<StanceExample>& examples,
                  const std::vector<size_t>& batch) {
  ForwardState s = Forward(params, examples, batch);
  return nn::SoftmaxCrossEntropy(s.logits, BatchLabels(examples, batch)).loss;
}

void CheckStanceSchema(const nn::ParamSet& params, const Vocabulary& vocab) {
  for (const char* name : {kEmbedding, kProjW, kProjB, kHeadW1, kHeadB1, kHeadW2, kHeadB2}) {
    if (!params.Has(name)) throw DataError(fmt::format("stance parameters lack tensor '{}'", name));
  }
  const auto& emb = params.at(kEmbedding);
  if (emb.rows() != vocab.size()) {
    throw DataError(fmt::format("schema mismatch: embedding has {} rows, vocabulary has {} tokens",
                                emb.rows(), vocab.size()));
  }
  if (params.at(kHeadW1).rows() != emb.cols() || params.at(kHeadW2).cols() != kNumStances ||
      params.at(kHeadW2).rows() != params.at(kHeadW1).cols()) {
    throw DataError("schema mismatch: stance head shapes do not fit the encoder");
  }
}

std::vector<Prediction> Predict(const nn::ParamSet& params, const std::vector<StanceExample>& examples) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  constexpr size_t kChunk = 256;
  for (size_t start = 0; start < examples.size(); start += kChunk) {
    std::vector<size_t> batch;
    for (size_t i = start; i < std::min(examples.size(), start + kChunk); ++i) batch.push_back(i);
    Tensor2 probs = nn::SoftmaxRows(Forward(params, examples, batch).logits);
    for (size_t i = 0; i < batch.size(); ++i) {
      Prediction p;
      size_t best = 0;
      for (size_t c = 0; c < kNumStances; ++c) {
        p.probs[c] = probs(i, c);
        if (probs(i, c) > probs(i, best)) best = c;
      }
      p.label = static_cast<StanceLabel>(best);
      out.push_back(p);
    }
  }
  return out;
}

double EvalAccuracy(const nn::ParamSet& params, const std::vector<StanceExample>& examples) {
  if (examples.empty()) throw DataError("accuracy over an empty example set");
  auto preds = Predict(params, examples);
  size_t hits = 0;
  for (size_t i = 0; i < preds.size(); ++i) hits += static_cast<int>(preds[i].label) == examples[i].label;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

Checkpoint Finetune(const Checkpoint& init, const std::vector<StanceExample>& train,
                    const std::vector<StanceExample>& val, const HyperConfig& hyper,
                    FinetuneOptions options) {
  if (train.empty()) throw DataError("fine-tuning needs training examples");
  if (hyper.batch < 1) throw UsageError("batch size must be positive");
  if (hyper.epochs < 0) throw UsageError("epochs must be non-negative");
  if (!(hyper.learning_rate > 0) || !(hyper.weight_decay >= 0)) {
    throw UsageError("learning rate must be positive and weight decay non-negative");
  }
  const std::string shared = init.shared_init_id.empty() ? "enc-" + ParamDigest(init.params)
                                                         : init.shared_init_id;
  ParamSet params;
  for (const char* name : {kEmbedding, kProjW, kProjB}) params.Add(name, init.params.at(name));
  if (init.params.Has(kHeadW1)) {
    for (const char* name : {kHeadW1, kHeadB1, kHeadW2, kHeadB2}) params.Add(name, init.params.at(name));
  } else {
    params.Append(InitHead(EncoderDim(params), options.hidden, HeadSeed(shared, hyper.seed)));
  }

  nn::AdamState adam = nn::AdamState::For(
      params, {.lr = hyper.learning_rate, .weight_decay = hyper.weight_decay});
  // The data order depends only on the seed, so configs differ in their
  // optimizer settings alone.
  Rng rng(DeriveSeed(hyper.seed, "finetune-order:" + shared));
  std::vector<size_t> order = AllIndices(train.size());
  const size_t batch = static_cast<size_t>(hyper.batch);
  nlohmann::ordered_json epoch_losses = nlohmann::ordered_json::array();
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.Shuffle(order);
    double loss_sum = 0;
    size_t n_batches = 0;
    for (size_t start = 0; start < order.size(); start += batch) {
      std::vector<size_t> b(order.begin() + static_cast<std::ptrdiff_t>(start),
                            order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch)));
      BatchLoss bl = StanceLossAndGrad(params, train, b);
      if (!std::isfinite(bl.loss)) {
        throw NumericError(fmt::format("fine-tuning loss diverged at epoch {}", epoch + 1));
      }
      nn::AdamStep(params, bl.grads, adam);
      loss_sum += bl.loss;
      ++n_batches;
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(n_batches));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params.tensor(i).AllFinite()) throw NumericError("fine-tuned parameters are not finite");
  }

  Checkpoint ck;
  ck.kind = "stance";
  ck.shared_init_id = shared;
  ck.hyper = hyper;
  ck.params = std::move(params);
  if (!val.empty()) ck.val_accuracy = EvalAccuracy(ck.params, val);
  ck.meta["hidden"] = options.hidden;
  ck.meta["train_examples"] = train.size();
  ck.meta["epoch_losses"] = epoch_losses;
  for (const char* key : {"vocab_digest", "vocab_size", "dim"}) {
    if (init.meta.contains(key)) ck.meta[key] = init.meta[key];
  }
  return ck;
}

std::vector<HyperConfig> DefaultGrid(uint64_t seed) {
  static constexpr std::pair<double, double> kGrid[] = {
      {2e-5, 0.01}, {1e-5, 0.01}, {1e-4, 0.001}, {1e-4, 0.01}, {1e-5, 0.001},
      {3e-5, 0.001}, {3e-5, 0.01}, {2e-5, 0.1}, {1e-4, 1e-4}, {1e-5, 0.1},
  };
  std::vector<HyperConfig> grid;
  for (const auto& [lr, wd] : kGrid) {
    grid.push_back({.learning_rate = lr, .weight_decay = wd, .epochs = 10, .batch = 32, .seed = seed});
  }
  return grid;
}

std::vector<Checkpoint> Sweep(const Checkpoint& init, const std::vector<StanceExample>& train,
                              const std::vector<StanceExample>& val,
                              const std::vector<HyperConfig>& grid, FinetuneOptions options) {
  if (grid.empty()) throw UsageError("sweep grid is empty");
  std::vector<Checkpoint> out;
  for (size_t i = 0; i < grid.size(); ++i) {
    Checkpoint ck = Finetune(init, train, val, grid[i], options);
    ck.id = fmt::format("hyper{:02d}", i + 1);
    spdlog::info("{}: lr={} wd={} val_accuracy={}", ck.id, grid[i].learning_rate, grid[i].weight_decay,
                 ck.val_accuracy ? FormatDouble(*ck.val_accuracy) : "n/a");
    out.push_back(std::move(ck));
  }
  return out;
}

std::string SerializePredictions(const std::vector<StanceExample>& examples,
                                 const std::vector<Prediction>& predictions, const std::string& comment) {
  if (examples.size() != predictions.size()) throw std::invalid_argument("predictions/examples mismatch");
  csv::Writer w;
  if (!comment.empty()) w.Comment(comment);
  w.WriteRow({"ad_id", "predicted_stance", "p_pro", "p_clean", "p_neutral", "theme_id"});
  for (size_t i = 0; i < examples.size(); ++i) {
    const auto& p = predictions[i];
    w.WriteRow({examples[i].ad_id, std::string(StanceName(p.label)), FormatDouble(p.probs[0]),
                FormatDouble(p.probs[1]), FormatDouble(p.probs[2]), examples[i].theme_id});
  }
  return w.str();
}

std::vector<PredictionRow> ParsePredictions(std::string_view csv_text) {
  csv::Table t = csv::ParseTable(csv_text);
  const int c_ad = t.Column("ad_id"), c_pred = t.Column("predicted_stance"), c_pp = t.Column("p_pro"),
            c_pc = t.Column("p_clean"), c_pn = t.Column("p_neutral"), c_th = t.Column("theme_id");
  if (c_ad < 0 || c_pred < 0) throw DataError("prediction CSV needs ad_id and predicted_stance");
  std::vector<PredictionRow> out;
  for (const auto& row : t.rows) {
    PredictionRow r;
    r.ad_id = t.Get(row, c_ad);
    r.predicted = ParseStance(t.Get(row, c_pred));
    if (c_pp >= 0 && c_pc >= 0 && c_pn >= 0) {
      r.probs = {std::stod(t.Get(row, c_pp)), std::stod(t.Get(row, c_pc)), std::stod(t.Get(row, c_pn))};
    }
    if (c_th >= 0) r.theme_id = t.Get(row, c_th);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

double SmoothedIdf(size_t n_docs, size_t doc_freq) {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(doc_freq))) + 1.0;
}

namespace {

// Sparse L2-normalized tf-idf row.
using SparseRow = std::vector<std::pair<size_t, double>>;

SparseRow Featurize(const TfidfModel& m, std::string_view doc) {
  std::map<size_t, double> tf;
  for (const auto& tok : Tokenize(doc)) {
    auto it = m.terms.find(tok);
    if (it != m.terms.end()) tf[it->second] += 1.0;
  }
  SparseRow row;
  double sq = 0;
  for (const auto& [j, count] : tf) {
    const double v = count * m.idf[j];
    row.emplace_back(j, v);
    sq += v * v;
  }
  if (sq > 0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& e : row) e.second *= inv;
  }
  return row;
}

void Logits(const TfidfModel& m, const SparseRow& x, double out[kNumStances]) {
  for (int c = 0; c < kNumStances; ++c) out[c] = m.bias(0, static_cast<size_t>(c));
  for (const auto& [j, v] : x) {
    for (int c = 0; c < kNumStances; ++c) out[c] += v * m.weights(j, static_cast<size_t>(c));
  }
}

void SoftmaxInPlace(double z[kNumStances]) {
  double mx = z[0];
  for (int c = 1; c < kNumStances; ++c) mx = std::max(mx, z[c]);
  double sum = 0;
  for (int c = 0; c < kNumStances; ++c) sum += z[c] = std::exp(z[c] - mx);
  for (int c = 0; c < kNumStances; ++c) z[c] /= sum;
}

}  // namespace

TfidfModel TrainTfidfLr(const std::vector<std::string>& docs, const std::vector<int>& labels,
                        TfidfOptions options) {
  if (docs.size() != labels.size()) throw std::invalid_argument("docs/labels length mismatch");
  if (docs.empty()) throw DataError("tf-idf baseline needs training documents");
  std::set<int> classes;
  for (int y : labels) {
    if (y < 0 || y >= kNumStances) throw DataError("tf-idf baseline: label out of range");
    classes.insert(y);
  }
  if (classes.size() < 2) throw DataError("tf-idf baseline: training data holds a single class");
  if (!(options.c > 0)) throw UsageError("tf-idf C must be positive");

  TfidfModel m;
  std::map<std::string, size_t> df;
  for (const auto& doc : docs) {
    auto toks = Tokenize(doc);
    std::set<std::string> uniq(toks.begin(), toks.end());
    for (const auto& t : uniq) ++df[t];
  }
  for (const auto& [term, count] : df) {
    m.terms.emplace(term, m.idf.size());
    m.idf.push_back(SmoothedIdf(docs.size(), count));
  }
  std::vector<SparseRow> x;
  x.reserve(docs.size());
  for (const auto& doc : docs) x.push_back(Featurize(m, doc));

  const size_t v = m.idf.size();
  const double n = static_cast<double>(docs.size());
  const double l2 = 1.0 / (options.c * n);
  m.weights = Tensor2(v, kNumStances);
  m.bias = Tensor2(1, kNumStances);
  Tensor2 gw(v, kNumStances), gb(1, kNumStances);
  for (m.iterations = 0; m.iterations < options.max_iter; ++m.iterations) {
    gw.Fill(0.0);
    gb.Fill(0.0);
    for (size_t i = 0; i < x.size(); ++i) {
      double p[kNumStances];
      Logits(m, x[i], p);
      SoftmaxInPlace(p);
      p[labels[i]] -= 1.0;
      for (int c = 0; c < kNumStances; ++c) {
        const double r = p[c] / n;
        gb(0, static_cast<size_t>(c)) += r;
        for (const auto& [j, val] : x[i]) gw(j, static_cast<size_t>(c)) += r * val;
      }
    }
    double sq = 0;
    for (size_t k = 0; k < gw.size(); ++k) {
      gw.values()[k] += l2 * m.weights.values()[k];
      sq += gw.values()[k] * gw.values()[k];
    }
    for (double g : gb.values()) sq += g * g;
    m.final_grad_norm = std::sqrt(sq);
    if (!std::isfinite(m.final_grad_norm)) throw NumericError("tf-idf gradient is not finite");
    if (m.final_grad_norm < options.grad_tol) break;
    for (size_t k = 0; k < gw.size(); ++k) m.weights.values()[k] -= options.step * gw.values()[k];
    for (size_t k = 0; k < gb.size(); ++k) m.bias.values()[k] -= options.step * gb.values()[k];
  }
  return m;
}

std::vector<Prediction> PredictTfidf(const TfidfModel& model, const std::vector<std::string>& docs) {
  std::vector<Prediction> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    double p[kNumStances];
    Logits(model, Featurize(model, doc), p);
    SoftmaxInPlace(p);
    Prediction pred;
    size_t best = 0;
    for (size_t c = 0; c < kNumStances; ++c) {
      pred.probs[c] = p[c];
      if (p[c] > p[best]) best = c;
    }
    pred.label = static_cast<StanceLabel>(best);
    out.push_back(pred);
  }
  return out;
}

}  // namespace climsoup
