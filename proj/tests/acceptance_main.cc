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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Every reference value is computed here
// by an oracle written independently of the library code under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <unistd.h>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "climsoup/analytics.h"
#include "climsoup/common.h"
#include "climsoup/corpus.h"
#include "climsoup/csv.h"
#include "climsoup/embedder.h"
#include "climsoup/metrics.h"
#include "climsoup/nncore.h"
#include "climsoup/pipeline.h"
#include "climsoup/soup.h"
#include "climsoup/stance.h"
#include "climsoup/synth.h"
#include "climsoup/themes.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace climsoup;
using nn::ParamSet;
using nn::Tensor2;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks without stopping at the first one.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void Note(const std::string& s) { notes_.push_back(s); }
  Outcome Result() const {
    Outcome o;
    o.pass = failures_.empty();
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    for (size_t i = 0; i < failures_.size() && i < 5; ++i) s += (s.empty() ? "" : "; ") + ("FAILED " + failures_[i]);
    if (failures_.size() > 5) s += fmt::format("; ... {} more", failures_.size() - 5);
    o.detail = s;
    return o;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// ---------------------------------------------------------------------------
// Finite differences

Tensor2 RandomTensor(size_t r, size_t c, Rng& rng, double scale = 1.0) {
  Tensor2 t(r, c);
  for (double& v : t.values()) v = rng.Uniform(-scale, scale);
  return t;
}

Tensor2 CentralDiff(Tensor2 x, const std::function<double(const Tensor2&)>& f, double eps) {
  Tensor2 g(x.rows(), x.cols());
  for (size_t i = 0; i < x.size(); ++i) {
    const double keep = x.values()[i];
    x.values()[i] = keep + eps;
    const double up = f(x);
    x.values()[i] = keep - eps;
    const double down = f(x);
    x.values()[i] = keep;
    g.values()[i] = (up - down) / (2 * eps);
  }
  return g;
}

double RelErr(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

double MaxRelErr(const Tensor2& analytic, const Tensor2& numeric) {
  double worst = 0;
  for (size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, RelErr(analytic.values()[i], numeric.values()[i]));
  return worst;
}

double Project(const Tensor2& y, const Tensor2& w) {
  double s = 0;
  for (size_t i = 0; i < y.size(); ++i) s += y.values()[i] * w.values()[i];
  return s;
}

// Differentiates `loss` with respect to every tensor of `params`.
double MaxRelErrParams(ParamSet params, const std::function<double(const ParamSet&)>& loss,
                       const ParamSet& analytic, double eps) {
  double worst = 0;
  for (size_t t = 0; t < params.size(); ++t) {
    Tensor2 numeric = CentralDiff(
        params.tensor(t),
        [&](const Tensor2& v) {
          ParamSet q = params;
          q.tensor(t) = v;
          return loss(q);
        },
        eps);
    worst = std::max(worst, MaxRelErr(analytic.tensor(t), numeric));
  }
  return worst;
}

Outcome Ac1GradientFidelity() {
  const auto start = std::chrono::steady_clock::now();
  const double tol = 1e-4;
  std::map<std::string, double> worst;
  auto record = [&worst](const std::string& k, double e) { worst[k] = std::max(worst[k], e); };

  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(DeriveSeed(seed, "ac1"));
    {
      Tensor2 x = RandomTensor(3, 4, rng), w = RandomTensor(4, 5, rng), b = RandomTensor(1, 5, rng);
      Tensor2 r = RandomTensor(3, 5, rng);
      auto g = nn::LinearBackward(x, w, r);
      record("linear.dx", MaxRelErr(g.dx, CentralDiff(x, [&](const Tensor2& v) { return Project(nn::LinearForward(v, w, b), r); }, 1e-6)));
      record("linear.dw", MaxRelErr(g.dw, CentralDiff(w, [&](const Tensor2& v) { return Project(nn::LinearForward(x, v, b), r); }, 1e-6)));
      record("linear.db", MaxRelErr(g.db, CentralDiff(b, [&](const Tensor2& v) { return Project(nn::LinearForward(x, w, v), r); }, 1e-6)));
    }
    {
      Tensor2 x = RandomTensor(6, 4, rng), r = RandomTensor(1, 4, rng);
      std::vector<bool> mask(6);
      for (size_t i = 0; i < 6; ++i) mask[i] = i == 0 || rng.Uniform01() < 0.6;
      record("mean_pool", MaxRelErr(nn::MeanPoolBackward(r, mask),
                                    CentralDiff(x, [&](const Tensor2& v) { return Project(nn::MeanPool(v, mask), r); }, 1e-6)));
    }
    {
      Tensor2 x = RandomTensor(3, 4, rng, 2.0), r = RandomTensor(3, 4, rng);
      record("tanh", MaxRelErr(nn::TanhBackward(nn::TanhForward(x), r),
                               CentralDiff(x, [&](const Tensor2& v) { return Project(nn::TanhForward(v), r); }, 1e-6)));
    }
    {
      Tensor2 logits = RandomTensor(5, 3, rng, 3.0);
      std::vector<int> labels(5);
      for (int& l : labels) l = static_cast<int>(rng.UniformInt(3));
      record("softmax_ce", MaxRelErr(nn::SoftmaxCrossEntropy(logits, labels).grad,
                                     CentralDiff(logits, [&](const Tensor2& v) { return nn::SoftmaxCrossEntropy(v, labels).loss; }, 1e-6)));
    }
    {
      Tensor2 a = RandomTensor(4, 5, rng), p = RandomTensor(4, 5, rng);
      auto m = MnrlLoss(a, p, kDefaultSimilarityScale);
      record("mnrl.anchors", MaxRelErr(m.d_anchors, CentralDiff(a, [&](const Tensor2& v) { return MnrlLoss(v, p).loss; }, 1e-5)));
      record("mnrl.positives", MaxRelErr(m.d_positives, CentralDiff(p, [&](const Tensor2& v) { return MnrlLoss(a, v).loss; }, 1e-5)));
    }
    {
      ParamSet enc = InitEncoderParams(14, 6, seed);
      for (size_t t = 0; t < enc.size(); ++t)
        for (double& v : enc.tensor(t).values()) v = rng.Uniform(-1, 1);
      std::vector<int> ids;
      for (int k = 0; k < 5; ++k) ids.push_back(3 + static_cast<int>(rng.UniformInt(11)));
      Tensor2 r = RandomTensor(1, 6, rng);
      ParamSet g = enc.ZerosLike();
      EncodeBackward(enc, EncodeForward(enc, ids), r, g);
      record("encoder", MaxRelErrParams(enc, [&](const ParamSet& q) { return Project(EncodeForward(q, ids).unit, r); }, g, 1e-6));
    }
    {
      ParamSet model = InitEncoderParams(16, 6, seed);
      for (size_t t = 0; t < model.size(); ++t)
        for (double& v : model.tensor(t).values()) v = rng.Uniform(-1, 1);
      model.Append(InitHead(6, 5, seed));
      for (size_t t = 0; t < model.size(); ++t)
        for (double& v : model.tensor(t).values()) v += rng.Uniform(-0.2, 0.2);
      std::vector<StanceExample> ex(5);
      for (size_t i = 0; i < ex.size(); ++i) {
        for (size_t k = 0; k < 2 + i; ++k) ex[i].ids.push_back(3 + static_cast<int>(rng.UniformInt(13)));
        ex[i].label = static_cast<int>(rng.UniformInt(3));
      }
      const std::vector<size_t> batch = {0, 1, 2, 3, 4};
      BatchLoss bl = StanceLossAndGrad(model, ex, batch);
      record("encoder+head", MaxRelErrParams(model, [&](const ParamSet& q) { return StanceLoss(q, ex, batch); }, bl.grads, 1e-6));
    }
  }
  const double secs = Seconds(start);
  Checker c;
  double overall = 0;
  std::string worst_name;
  for (const auto& [name, e] : worst) {
    c.Expect(e < tol, fmt::format("{} max rel err {:.3g}", name, e));
    if (e >= overall) {
      overall = e;
      worst_name = name;
    }
  }
  c.Expect(secs < 60, fmt::format("runtime {:.1f}s", secs));
  c.Note(fmt::format("{} kernels x 10 seeds, worst {} = {:.2e} (< 1e-4), {:.2f}s", worst.size(), worst_name, overall, secs));
  return c.Result();
}

// ---------------------------------------------------------------------------
// Synthetic pipeline runs

struct RunArtifacts {
  fs::path dir;
  RunConfig config;
  EvalSummary summary;
  double seconds = 0;
};

fs::path ScratchRoot() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / fmt::format("climsoup_acceptance_{}", ::getpid());
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

// Writes a generated library plus a config next to it and returns the
// config path.
fs::path WriteSynthetic(const fs::path& dir, const SynthConfig& sc) {
  fs::create_directories(dir);
  const PhraseBank bank = LoadPhraseBank(fs::path(CLIMSOUP_DATA_DIR) / "themes.json");
  SynthCorpus s = GenerateSynthetic(sc, bank);
  WriteFile(dir / "corpus.jsonl", SerializeJsonl(s.corpus));
  WriteFile(dir / "registry.csv", SerializeRegistry(s.registry));
  csv::Writer w;
  w.WriteRow({"ad_id", "theme_id"});
  for (const auto& [id, theme] : s.annotations) w.WriteRow({id, theme});
  WriteFile(dir / "annotations.csv", w.str());
  json cfg = {{"paths",
               {{"corpus", "corpus.jsonl"},
                {"registry", "registry.csv"},
                {"themes", (fs::path(CLIMSOUP_DATA_DIR) / "themes.json").string()},
                {"keywords", (fs::path(CLIMSOUP_DATA_DIR) / "keywords.txt").string()},
                {"annotations", "annotations.csv"},
                {"workdir", "work"}}},
              {"seed", sc.seed},
              {"sweep", {{"grid", "default"}, {"lr_scale", 100.0}}}};
  WriteFile(dir / "config.json", cfg.dump(2) + "\n");
  return dir / "config.json";
}

RunArtifacts RunSynthetic(const std::string& name, uint64_t seed) {
  SynthConfig sc;  // 48 funders, 2400 ads
  sc.seed = seed;
  RunArtifacts r;
  r.dir = ScratchRoot() / name;
  const fs::path cfg = WriteSynthetic(r.dir, sc);
  r.config = LoadRunConfig(cfg);
  const auto start = std::chrono::steady_clock::now();
  r.summary = Pipeline(r.config).RunAll();
  r.seconds = Seconds(start);
  return r;
}

// ---------------------------------------------------------------------------

Outcome Ac2SoupAlgebra(const RunArtifacts& run) {
  Checker c;
  std::vector<Checkpoint> sweep;
  for (int i = 1; i <= 10; ++i) {
    sweep.push_back(LoadCheckpoint(run.config.workdir / "checkpoints" / "sweep" / fmt::format("hyper{:02d}", i)));
  }
  // k identical copies
  for (size_t k : {1, 2, 3, 7, 10}) {
    std::vector<Checkpoint> copies(k, sweep[3]);
    c.Expect(UniformSoup(copies).soup.params == sweep[3].params, fmt::format("{} copies not bitwise equal", k));
  }
  // flatten-space mean
  std::vector<double> oracle(Flatten(sweep[0].params).size(), 0.0);
  for (const auto& ck : sweep) {
    const auto f = Flatten(ck.params);
    for (size_t i = 0; i < f.size(); ++i) oracle[i] += f[i];
  }
  for (double& v : oracle) v /= static_cast<double>(sweep.size());
  const auto soup_flat = Flatten(UniformSoup(sweep).soup.params);
  double max_diff = 0;
  for (size_t i = 0; i < oracle.size(); ++i) max_diff = std::max(max_diff, std::abs(soup_flat[i] - oracle[i]));
  c.Expect(max_diff <= 1e-12, fmt::format("flatten oracle diff {:.3g}", max_diff));
  // Saved uniform soup equals the recomputed one.
  const Checkpoint saved = LoadCheckpoint(run.config.workdir / "soups" / "uniform_soup");
  c.Expect(saved.params == UniformSoup(sweep).soup.params, "saved uniform soup differs from recomputation");

  // soup(theta, 2s - theta) = s with theta and s from the sweep, rounded to
  // a dyadic grid so 2s - theta is exactly representable.
  auto dyadic = [](ParamSet p) {
    for (size_t t = 0; t < p.size(); ++t)
      for (double& v : p.tensor(t).values()) v = std::ldexp(std::round(std::ldexp(v, 24)), -24);
    return p;
  };
  Checkpoint theta = sweep[0], mirror = sweep[0], centre = sweep[1];
  theta.params = dyadic(sweep[0].params);
  centre.params = dyadic(sweep[1].params);
  mirror.params = theta.params;
  for (size_t t = 0; t < mirror.params.size(); ++t) {
    auto& m = mirror.params.tensor(t).values();
    const auto& s = centre.params.tensor(t).values();
    for (size_t i = 0; i < m.size(); ++i) m[i] = 2 * s[i] - m[i];
  }
  c.Expect(UniformSoup({theta, mirror}).soup.params == centre.params, "soup(theta, 2s - theta) != s");
  c.Note(fmt::format("{} params per model, flatten diff {:.1e}", oracle.size(), max_diff));
  return c.Result();
}

Outcome Ac3Greedy(const std::vector<const RunArtifacts*>& runs) {
  Checker c;
  // Three ingredients with a scalar weight; validation accuracy peaks at a
  // mean of 2, so {1st, 2nd} improves and the 3rd degrades.
  auto member = [](const std::string& id, double w, double val) {
    Checkpoint ck;
    ck.id = id;
    ck.shared_init_id = "fixture";
    ck.params.Add("w", Tensor2(1, 1, w));
    ck.val_accuracy = val;
    return ck;
  };
  std::vector<Checkpoint> ms = {member("m1", 1.0, 0.80), member("m2", 3.0, 0.78), member("m3", -6.0, 0.75)};
  auto eval = [](const ParamSet& p) { return 0.9 - std::abs(p.at("w")(0, 0) - 2.0) / 20; };
  // Exhaustive oracle: score all 2^3 - 1 subsets, then replay the greedy
  // rule with those scores.
  std::map<unsigned, double> subset_score;
  for (unsigned mask = 1; mask < 8; ++mask) {
    double sum = 0, k = 0;
    for (unsigned i = 0; i < 3; ++i)
      if (mask & (1u << i)) {
        sum += ms[i].params.at("w")(0, 0);
        ++k;
      }
    ParamSet p;
    p.Add("w", Tensor2(1, 1, sum / k));
    subset_score[mask] = eval(p);
  }
  unsigned chosen = 1;  // m1 has the best recorded val accuracy
  for (unsigned i = 1; i < 3; ++i) {
    if (subset_score[chosen | (1u << i)] >= subset_score[chosen]) chosen |= 1u << i;
  }
  std::vector<std::string> expected;
  for (unsigned i = 0; i < 3; ++i)
    if (chosen & (1u << i)) expected.push_back(ms[i].id);
  const SoupResult r = GreedySoup(ms, eval);
  c.Expect(r.ingredients == expected, "greedy ingredients differ from exhaustive-subset oracle");
  c.Expect(expected == std::vector<std::string>{"m1", "m2"}, "fixture should select the top two");
  double best_subset = 0;
  for (const auto& [mask, s] : subset_score) best_subset = std::max(best_subset, s);
  c.Expect(*r.soup.val_accuracy == best_subset, "greedy did not reach the best subset score on the fixture");

  std::string margins;
  for (const auto* run : runs) {
    double best = 0;
    for (const auto& m : run->summary.sweep) best = std::max(best, *m.val_accuracy);
    const double greedy = *run->summary.greedy_soup.val_accuracy;
    c.Expect(greedy >= best, fmt::format("seed {}: greedy val {:.4f} < best individual {:.4f}", run->config.seed, greedy, best));
    margins += fmt::format("{}{:.4f}>={:.4f}", margins.empty() ? "" : ", ", greedy, best);
  }
  c.Note(fmt::format("fixture picks {{m1,m2}}; greedy vs best val over {} pipeline seeds: {}", runs.size(), margins));
  return c.Result();
}

Outcome Ac4EndToEnd(const RunArtifacts& run) {
  Checker c;
  const SynthConfig defaults;
  c.Expect(defaults.n_funders >= 40 && defaults.n_ads >= 2000, "synthetic corpus below the required size");
  const auto& s = run.summary;
  double best_f1 = 0;
  std::string best_id;
  for (const auto& m : s.sweep) {
    if (m.macro_f1 > best_f1) {
      best_f1 = m.macro_f1;
      best_id = m.id;
    }
  }
  c.Expect(s.uniform_soup.accuracy >= 0.85, fmt::format("uniform soup test accuracy {:.4f}", s.uniform_soup.accuracy));
  c.Expect(s.uniform_soup.macro_f1 >= best_f1 - 0.02,
           fmt::format("uniform soup macro-F1 {:.4f} < best individual {:.4f} - 0.02", s.uniform_soup.macro_f1, best_f1));
  c.Expect(run.seconds < 600, fmt::format("runtime {:.0f}s", run.seconds));
  c.Note(fmt::format("{} funders/{} ads: uniform acc {:.4f} F1 {:.4f}, greedy acc {:.4f} F1 {:.4f}, best individual {} F1 {:.4f}, "
                     "tfidf acc {:.4f}; {:.1f}s",
                     defaults.n_funders, defaults.n_ads, s.uniform_soup.accuracy, s.uniform_soup.macro_f1,
                     s.greedy_soup.accuracy, s.greedy_soup.macro_f1, best_id, best_f1, s.baseline.accuracy, run.seconds));
  return c.Result();
}

// Exact two-sided 99% band for Binomial(n, p).
std::pair<int, int> BinomialBand99(int n, double p) {
  std::vector<double> pmf(static_cast<size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                      (n - k) * std::log1p(-p));
  }
  int lo = 0, hi = n;
  double below = 0, above = 0;
  while (below + pmf[lo] <= 0.005) below += pmf[lo++];
  while (above + pmf[hi] <= 0.005) above += pmf[hi--];
  return {lo, hi};
}

Outcome Ac5Themes(const RunArtifacts& run) {
  Checker c;
  const PhraseBank bank = LoadPhraseBank(run.config.themes);
  c.Expect(bank.size() == 15, fmt::format("bank has {} themes", bank.size()));
  const auto annotations = LoadAnnotations(*run.config.annotations);
  const int n = static_cast<int>(annotations.size());
  const auto [lo, hi] = BinomialBand99(n, 1.0 / static_cast<double>(bank.size()));
  const ThemeAudit random = EvalThemes(RandomAssignments(annotations, bank, run.config.seed), annotations, bank);
  const int hits = static_cast<int>(std::lround(random.accuracy * n));
  c.Expect(hits >= lo && hits <= hi, fmt::format("random hits {} outside [{}, {}]", hits, lo, hi));

  // Exact-phrase texts under the trained encoder.
  const Vocabulary vocab = Vocabulary::Parse(ReadFile(run.config.workdir / "checkpoints" / "vocab.txt"));
  const Checkpoint encoder = LoadCheckpoint(run.config.workdir / "checkpoints" / "encoder");
  ThemeIndex index(bank, vocab, encoder.params);
  std::map<std::multiset<std::string>, std::string> bag_owner;
  size_t phrases = 0, mismatched = 0;
  double worst = 0;
  for (const auto& theme : bank) {
    for (const auto& phrase : theme.phrases) {
      const auto tokens = Tokenize(phrase);
      auto [it, fresh] = bag_owner.emplace(std::multiset<std::string>(tokens.begin(), tokens.end()), theme.id);
      c.Expect(fresh || it->second == theme.id, fmt::format("phrase '{}' repeats a token bag of {}", phrase, it->second));
      const ThemeAssignment a = index.AssignText("phrase", phrase);
      ++phrases;
      if (a.theme_id != theme.id) ++mismatched;
      worst = std::max(worst, std::abs(a.score - 1.0));
    }
  }
  c.Expect(mismatched == 0, fmt::format("{} phrases mapped to another theme", mismatched));
  c.Expect(worst <= 1e-12, fmt::format("exact-phrase score off by {:.3g}", worst));
  const json audit = json::parse(ReadFile(run.config.workdir / "reports" / "theme_audit.json"));
  c.Note(fmt::format("random {:.4f} ({} of {}, band [{}, {}]); {} bank phrases self-map, max |score-1| {:.1e}; audit accuracy {}",
                     random.accuracy, hits, n, lo, hi, phrases, worst, audit.value("accuracy", json()).dump()));
  return c.Result();
}

double PearsonOracle(const std::vector<std::vector<double>>& t) {
  std::vector<double> rs(t.size(), 0), cs(t[0].size(), 0);
  double n = 0;
  for (size_t i = 0; i < t.size(); ++i)
    for (size_t j = 0; j < t[0].size(); ++j) {
      rs[i] += t[i][j];
      cs[j] += t[i][j];
      n += t[i][j];
    }
  double x = 0;
  for (size_t i = 0; i < t.size(); ++i)
    for (size_t j = 0; j < t[0].size(); ++j) {
      const double e = rs[i] * cs[j] / n;
      x += (t[i][j] - e) * (t[i][j] - e) / e;
    }
  return x;
}

// Upper tail by Simpson quadrature of the density after u = s^2.
double Chi2SfQuadrature(double x, int df) {
  if (x <= 0) return 1.0;
  const double log_norm = df / 2.0 * std::log(2.0) + std::lgamma(df / 2.0);
  auto g = [&](double s) {
    if (s == 0) return df == 1 ? 2.0 * std::exp(-log_norm) : 0.0;
    return 2.0 * std::exp((df - 1) * std::log(s) - s * s / 2 - log_norm);
  };
  const double b = std::sqrt(x);
  const int n = 40000;
  const double h = b / n;
  double sum = g(0) + g(b);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4 : 2) * g(i * h);
  return std::max(0.0, 1.0 - sum * h / 3);
}

metrics::ContingencyTable MakeTable(std::vector<std::vector<double>> counts) {
  metrics::ContingencyTable t;
  for (size_t i = 0; i < counts.size(); ++i) t.row_labels.push_back(fmt::format("r{}", i));
  for (size_t j = 0; j < counts[0].size(); ++j) t.col_labels.push_back(fmt::format("c{}", j));
  t.counts = std::move(counts);
  return t;
}

Outcome Ac6ChiSquare(const RunArtifacts& run) {
  Checker c;
  Rng rng(DeriveSeed(6, "ac6"));
  double worst_stat = 0, worst_p = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const size_t rows = 2 + rng.UniformInt(4), cols = 2 + rng.UniformInt(3);
    std::vector<std::vector<double>> t(rows, std::vector<double>(cols));
    for (auto& row : t)
      for (double& v : row) v = static_cast<double>(1 + rng.UniformInt(80));
    const auto r = metrics::ChiSquare(MakeTable(t));
    const double x = PearsonOracle(t);
    const int df = static_cast<int>((rows - 1) * (cols - 1));
    worst_stat = std::max(worst_stat, std::abs(r.statistic - x));
    worst_p = std::max(worst_p, std::abs(r.p_value - Chi2SfQuadrature(x, df)));
    c.Expect(r.df == df, "df mismatch");
  }
  c.Expect(worst_stat <= 1e-9, fmt::format("statistic diff {:.3g}", worst_stat));
  c.Expect(worst_p <= 1e-9, fmt::format("p-value diff {:.3g}", worst_p));

  for (const auto& fixed : {std::vector<std::vector<double>>{{2, 4, 6}, {3, 6, 9}},
                            std::vector<std::vector<double>>{{10, 10}, {10, 10}},
                            std::vector<std::vector<double>>{{1, 3}, {5, 15}, {2, 6}}}) {
    const auto r = metrics::ChiSquare(MakeTable(fixed));
    c.Expect(std::abs(r.statistic) < 1e-12 && std::abs(r.p_value - 1) < 1e-12, "independence table not a fixed point");
  }
  double worst_df2 = 0;
  for (double x = 0; x <= 30; x += 0.25) worst_df2 = std::max(worst_df2, std::abs(metrics::Chi2Sf(x, 2) - std::exp(-x / 2)));
  c.Expect(worst_df2 <= 1e-10, fmt::format("df=2 closed form diff {:.3g}", worst_df2));

  const json chi = json::parse(ReadFile(run.config.workdir / "reports" / "analytics" / "chi_square.json"));
  std::string ps;
  for (const char* mode : {"impressions", "ad_count"}) {
    const json& g = chi.at(mode).at("gender");
    const double p = g.at("test").at("p_value").get<double>();
    c.Expect(p < 0.05, fmt::format("gender x stance ({}) p = {:.3g}", mode, p));
    ps += fmt::format("{}{} p={:.2e}", ps.empty() ? "" : ", ", mode, p);
  }
  c.Note(fmt::format("10 random tables: |dstat| {:.1e}, |dp| {:.1e}; df=2 {:.1e}; gender x stance {}", worst_stat, worst_p,
                     worst_df2, ps));
  return c.Result();
}

Outcome Ac7Splits() {
  Checker c;
  Rng rng(DeriveSeed(7, "ac7"));
  size_t overlaps = 0, lost = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n_entities = 5 + rng.UniformInt(120);
    std::vector<LabeledAd> ads;
    const size_t n_ads = n_entities + rng.UniformInt(4 * n_entities);
    for (size_t i = 0; i < n_ads; ++i) {
      LabeledAd la;
      la.ad.id = fmt::format("ad{}", i);
      la.ad.funding_entity = fmt::format("entity{}", i < n_entities ? i : rng.UniformInt(n_entities));
      la.stance = static_cast<StanceLabel>(rng.UniformInt(3));
      ads.push_back(std::move(la));
    }
    const SplitAssignment sa = SplitByEntity(ads, rng.Next());
    std::map<std::string, std::set<Split>> seen;
    size_t selected = 0;
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
      for (const auto& la : sa.Select(ads, s)) {
        seen[la.ad.funding_entity].insert(s);
        ++selected;
      }
    }
    for (const auto& [entity, splits] : seen) overlaps += splits.size() > 1 ? 1 : 0;
    lost += selected != ads.size() ? 1 : 0;
  }
  c.Expect(overlaps == 0, fmt::format("{} entities in more than one split", overlaps));
  c.Expect(lost == 0, fmt::format("{} trials lost or duplicated ads", lost));

  std::vector<std::string> entities;
  for (int i = 0; i < 408; ++i) entities.push_back(fmt::format("funder{:03d}", i));
  const SplitAssignment sa = SplitEntities(entities, 42);
  const size_t tr = sa.Entities(Split::kTrain).size(), va = sa.Entities(Split::kVal).size(),
               te = sa.Entities(Split::kTest).size();
  c.Expect(tr == 261 && va == 65 && te == 82, fmt::format("408 entities -> {}/{}/{}", tr, va, te));
  c.Note(fmt::format("1000 trials, 0 overlaps; 408 -> train {} / val {} / test {}", tr, va, te));
  return c.Result();
}

Outcome Ac8Determinism(const RunArtifacts& run) {
  Checker c;
  Pipeline original(run.config);
  std::map<fs::path, std::string> before;
  for (const auto& stage : Pipeline::StageNames())
    for (const auto& rel : original.StageOutputs(stage)) before[rel] = ReadFile(run.config.workdir / rel);

  // A second full run in a fresh workdir.
  RunConfig fresh = LoadRunConfig(run.dir / "config.json");
  fresh.workdir = run.dir / "work_rerun";
  Pipeline second(fresh);
  second.RunAll();
  size_t differ = 0;
  for (const auto& [rel, bytes] : before) {
    if (ReadFile(fresh.workdir / rel) != bytes) {
      ++differ;
      c.Expect(false, "fresh workdir differs: " + rel.string());
    }
  }
  // Every stage rerun in place, one at a time, in pipeline order.
  Pipeline again(run.config);
  const std::vector<std::function<void()>> stages = {
      [&] { again.Ingest(); },       [&] { again.Split(); }, [&] { again.TrainEmbed(); },
      [&] { again.AssignThemes(); }, [&] { again.Sweep(); }, [&] { again.Soup(); },
      [&] { again.Eval(); },         [&] { again.Analyze(); }};
  for (size_t i = 0; i < stages.size(); ++i) {
    stages[i]();
    for (const auto& rel : again.StageOutputs(Pipeline::StageNames()[i])) {
      if (ReadFile(run.config.workdir / rel) != before.at(rel)) {
        ++differ;
        c.Expect(false, "in-place rerun differs: " + rel.string());
      }
    }
  }
  c.Note(fmt::format("{} files compared across a fresh-workdir run and 8 in-place stage reruns, {} differ", before.size(),
                     differ));
  return c.Result();
}

template <typename F>
Outcome Guard(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  std::vector<std::pair<std::string, Outcome>> results;

  results.emplace_back("AC1 gradient fidelity", Guard(Ac1GradientFidelity));

  std::optional<RunArtifacts> main_run;
  std::vector<RunArtifacts> extra_runs;
  std::string run_error;
  try {
    main_run = RunSynthetic("seed1", 1);
    for (uint64_t seed : {2, 3, 4, 5}) extra_runs.push_back(RunSynthetic(fmt::format("seed{}", seed), seed));
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  auto needs_run = [&](auto&& f) -> Outcome {
    if (!main_run) return {false, "synthetic pipeline run failed: " + run_error};
    return Guard(f);
  };

  results.emplace_back("AC2 soup algebra", needs_run([&] { return Ac2SoupAlgebra(*main_run); }));
  results.emplace_back("AC3 greedy soup", needs_run([&] {
                         std::vector<const RunArtifacts*> runs = {&*main_run};
                         for (const auto& r : extra_runs) runs.push_back(&r);
                         if (runs.size() < 5) throw std::runtime_error("fewer than 5 pipeline seeds ran: " + run_error);
                         return Ac3Greedy(runs);
                       }));
  results.emplace_back("AC4 end-to-end benchmark", needs_run([&] { return Ac4EndToEnd(*main_run); }));
  results.emplace_back("AC5 theme audit", needs_run([&] { return Ac5Themes(*main_run); }));
  results.emplace_back("AC6 chi-square", needs_run([&] { return Ac6ChiSquare(*main_run); }));
  results.emplace_back("AC7 split integrity", Guard(Ac7Splits));
  results.emplace_back("AC8 determinism", needs_run([&] { return Ac8Determinism(*main_run); }));

  bool all = true;
  for (const auto& [name, o] : results) {
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    all = all && o.pass;
  }
  std::fflush(stdout);
  fs::remove_all(ScratchRoot());
  return all ? 0 : 1;
}
