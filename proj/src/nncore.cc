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

#include "climsoup/nncore.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "climsoup/common.h"

namespace climsoup::nn {

Tensor2::Tensor2(size_t rows, size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument(fmt::format("Tensor2: {} values for shape {}x{}",
                                            values_.size(), rows_, cols_));
  }
}

Tensor2 Tensor2::Identity(size_t n) {
  Tensor2 t(n, n);
  for (size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor2 Tensor2::RowVector(std::vector<double> values) {
  const size_t n = values.size();
  return Tensor2(1, n, std::move(values));
}

bool Tensor2::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor2::Fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string ShapeString(const Tensor2& t) { return fmt::format("{}x{}", t.rows(), t.cols()); }

void ParamSet::Add(std::string name, Tensor2 tensor) {
  if (Has(name)) throw std::invalid_argument("ParamSet: duplicate name " + name);
  entries_.emplace_back(std::move(name), std::move(tensor));
}

size_t ParamSet::NumValues() const {
  size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

bool ParamSet::Has(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

Tensor2& ParamSet::at(const std::string& name) {
  for (auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw std::out_of_range("ParamSet: no tensor named " + name);
}

const Tensor2& ParamSet::at(const std::string& name) const {
  return const_cast<ParamSet*>(this)->at(name);
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out;
  for (const auto& [name, t] : entries_) out.Add(name, Tensor2(t.rows(), t.cols()));
  return out;
}

bool ParamSet::SameSchema(const ParamSet& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first != o.entries_[i].first) return false;
    if (!entries_[i].second.SameShape(o.entries_[i].second)) return false;
  }
  return true;
}

void ParamSet::Append(const ParamSet& o) {
  for (const auto& [name, t] : o.entries_) Add(name, t);
}

namespace {

void RequireFinite(const Tensor2& t, const char* what) {
  if (!t.AllFinite()) throw NumericError(std::string(what) + ": non-finite value");
}

}  // namespace

Tensor2 MatMul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("MatMul: " + ShapeString(a) + " * " + ShapeString(b));
  }
  Tensor2 out(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Tensor2 LinearForward(const Tensor2& x, const Tensor2& w, const Tensor2& b) {
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw std::invalid_argument("LinearForward: bias " + ShapeString(b) + " vs weight " +
                                ShapeString(w));
  }
  Tensor2 y = MatMul(x, w);
  for (size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    for (size_t j = 0; j < y.cols(); ++j) r[j] += b(0, j);
  }
  return y;
}

LinearGrads LinearBackward(const Tensor2& x, const Tensor2& w, const Tensor2& dy) {
  if (x.cols() != w.rows() || dy.rows() != x.rows() || dy.cols() != w.cols()) {
    throw std::invalid_argument("LinearBackward: x " + ShapeString(x) + ", w " + ShapeString(w) +
                                ", dy " + ShapeString(dy));
  }
  LinearGrads g{Tensor2(x.rows(), x.cols()), Tensor2(w.rows(), w.cols()), Tensor2(1, w.cols())};
  for (size_t i = 0; i < x.rows(); ++i) {
    auto dyr = dy.row(i);
    auto xr = x.row(i);
    auto dxr = g.dx.row(i);
    for (size_t k = 0; k < w.rows(); ++k) {
      auto wr = w.row(k);
      auto dwr = g.dw.row(k);
      double acc = 0;
      for (size_t j = 0; j < w.cols(); ++j) {
        acc += dyr[j] * wr[j];
        dwr[j] += xr[k] * dyr[j];
      }
      dxr[k] = acc;
    }
    for (size_t j = 0; j < w.cols(); ++j) g.db(0, j) += dyr[j];
  }
  return g;
}

Tensor2 MeanPool(const Tensor2& tokens, const std::vector<bool>& mask) {
  if (mask.size() != tokens.rows()) {
    throw std::invalid_argument("MeanPool: mask length does not match token rows");
  }
  const size_t n = static_cast<size_t>(std::count(mask.begin(), mask.end(), true));
  if (n == 0) throw std::invalid_argument("MeanPool: all tokens masked");
  Tensor2 out(1, tokens.cols());
  for (size_t i = 0; i < tokens.rows(); ++i) {
    if (!mask[i]) continue;
    auto r = tokens.row(i);
    for (size_t j = 0; j < tokens.cols(); ++j) out(0, j) += r[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out.values()) v *= inv;
  return out;
}

Tensor2 MeanPoolBackward(const Tensor2& dpooled, const std::vector<bool>& mask) {
  if (dpooled.rows() != 1) throw std::invalid_argument("MeanPoolBackward: expected a row vector");
  const size_t n = static_cast<size_t>(std::count(mask.begin(), mask.end(), true));
  if (n == 0) throw std::invalid_argument("MeanPoolBackward: all tokens masked");
  const double inv = 1.0 / static_cast<double>(n);
  Tensor2 out(mask.size(), dpooled.cols());
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    auto r = out.row(i);
    for (size_t j = 0; j < dpooled.cols(); ++j) r[j] = dpooled(0, j) * inv;
  }
  return out;
}

Tensor2 TanhForward(const Tensor2& x) {
  Tensor2 y = x;
  for (double& v : y.values()) v = std::tanh(v);
  return y;
}

Tensor2 TanhBackward(const Tensor2& y, const Tensor2& dy) {
  if (!y.SameShape(dy)) throw std::invalid_argument("TanhBackward: shape mismatch");
  Tensor2 dx = dy;
  auto& d = dx.values();
  const auto& yv = y.values();
  for (size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - yv[i] * yv[i];
  return dx;
}

Tensor2 SoftmaxRows(const Tensor2& logits) {
  RequireFinite(logits, "SoftmaxRows");
  Tensor2 p = logits;
  for (size_t i = 0; i < p.rows(); ++i) {
    auto r = p.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double z = 0;
    for (double& v : r) {
      v = std::exp(v - mx);
      z += v;
    }
    for (double& v : r) v /= z;
  }
  return p;
}

LossAndGrad SoftmaxCrossEntropy(const Tensor2& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows() || logits.rows() == 0) {
    throw std::invalid_argument("SoftmaxCrossEntropy: labels/logits size mismatch");
  }
  RequireFinite(logits, "SoftmaxCrossEntropy");
  const size_t batch = logits.rows();
  LossAndGrad out{0.0, Tensor2(batch, logits.cols())};
  for (size_t i = 0; i < batch; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<size_t>(y) >= logits.cols()) {
      throw std::invalid_argument("SoftmaxCrossEntropy: label out of range");
    }
    auto r = logits.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double z = 0;
    for (double v : r) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    out.loss += log_z - r[static_cast<size_t>(y)];
    auto g = out.grad.row(i);
    for (size_t j = 0; j < r.size(); ++j) g[j] = std::exp(r[j] - log_z);
    g[static_cast<size_t>(y)] -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(batch);
  out.loss *= inv;
  for (double& v : out.grad.values()) v *= inv;
  return out;
}

AdamState AdamState::For(const ParamSet& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.m = params.ZerosLike();
  s.v = params.ZerosLike();
  return s;
}

void AdamStep(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (!params.SameSchema(grads) || !params.SameSchema(state.m) || !params.SameSchema(state.v)) {
    throw std::invalid_argument("AdamStep: parameter, gradient and moment shapes differ");
  }
  for (size_t i = 0; i < grads.size(); ++i) {
    RequireFinite(grads.tensor(i), "AdamStep gradient");
  }
  const AdamConfig& c = state.config;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const double decay = c.lr * c.weight_decay;
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params.tensor(i).values();
    const auto& g = grads.tensor(i).values();
    auto& m = state.m.tensor(i).values();
    auto& v = state.v.tensor(i).values();
    for (size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      if (decay != 0.0) p[k] -= decay * p[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

ParamSchema SchemaOf(const ParamSet& params) {
  ParamSchema schema;
  for (size_t i = 0; i < params.size(); ++i) {
    schema.push_back({params.name(i), params.tensor(i).rows(), params.tensor(i).cols()});
  }
  return schema;
}

std::vector<double> Flatten(const ParamSet& params) {
  std::vector<double> flat;
  flat.reserve(params.NumValues());
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& v = params.tensor(i).values();
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return flat;
}

ParamSet Unflatten(std::span<const double> flat, const ParamSchema& schema) {
  size_t expected = 0;
  for (const auto& s : schema) expected += s.rows * s.cols;
  if (expected != flat.size()) {
    throw std::invalid_argument(
        fmt::format("Unflatten: schema needs {} values, got {}", expected, flat.size()));
  }
  ParamSet out;
  size_t offset = 0;
  for (const auto& s : schema) {
    const size_t n = s.rows * s.cols;
    std::vector<double> values(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                               flat.begin() + static_cast<std::ptrdiff_t>(offset + n));
    out.Add(s.name, Tensor2(s.rows, s.cols, std::move(values)));
    offset += n;
  }
  return out;
}

double RelativeError(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult GradCheck(ParamSet& params, const std::function<double(const ParamSet&)>& loss,
                          const ParamSet& analytic, GradCheckOptions options) {
  if (!params.SameSchema(analytic)) {
    throw std::invalid_argument("GradCheck: analytic gradient schema differs from params");
  }
  // (tensor index, flat index) for every coordinate, then subsample.
  std::vector<std::pair<size_t, size_t>> coords;
  for (size_t t = 0; t < params.size(); ++t) {
    for (size_t k = 0; k < params.tensor(t).size(); ++k) coords.emplace_back(t, k);
  }
  if (coords.size() > options.max_coords) {
    Rng rng(options.seed);
    rng.Shuffle(coords);
    coords.resize(options.max_coords);
    std::sort(coords.begin(), coords.end());
  }
  GradCheckResult result;
  for (const auto& [t, k] : coords) {
    double& x = params.tensor(t).values()[k];
    const double saved = x;
    x = saved + options.eps;
    const double up = loss(params);
    x = saved - options.eps;
    const double down = loss(params);
    x = saved;
    const double numeric = (up - down) / (2.0 * options.eps);
    const double err = RelativeError(analytic.tensor(t).values()[k], numeric);
    ++result.checked;
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      const size_t cols = params.tensor(t).cols();
      result.worst = fmt::format("{}[{},{}]", params.name(t), k / cols, k % cols);
    }
  }
  return result;
}

}  // namespace climsoup::nn
