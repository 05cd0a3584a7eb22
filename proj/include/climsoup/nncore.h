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

#ifndef CLIMSOUP_NNCORE_H_
#define CLIMSOUP_NNCORE_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace climsoup::nn {

// Row-major float64 matrix.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Tensor2(size_t rows, size_t cols, std::vector<double> values);

  static Tensor2 Identity(size_t n);
  static Tensor2 RowVector(std::vector<double> values);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return values_.size(); }

  double& operator()(size_t r, size_t c) { return values_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool SameShape(const Tensor2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool AllFinite() const;
  void Fill(double v);

  bool operator==(const Tensor2&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> values_;
};

std::string ShapeString(const Tensor2& t);

// Named tensors in a stable order.
class ParamSet {
 public:
  void Add(std::string name, Tensor2 tensor);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  size_t NumValues() const;

  const std::string& name(size_t i) const { return entries_[i].first; }
  Tensor2& tensor(size_t i) { return entries_[i].second; }
  const Tensor2& tensor(size_t i) const { return entries_[i].second; }

  bool Has(const std::string& name) const;
  Tensor2& at(const std::string& name);
  const Tensor2& at(const std::string& name) const;

  // A ParamSet of zeros with the same names and shapes.
  ParamSet ZerosLike() const;
  bool SameSchema(const ParamSet& o) const;
  void Append(const ParamSet& o);

  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<std::pair<std::string, Tensor2>> entries_;
};

// ---------------------------------------------------------------------------
// Kernels. All inputs are validated; dimension mismatches throw
// std::invalid_argument and non-finite values throw NumericError.

Tensor2 MatMul(const Tensor2& a, const Tensor2& b);

// y = x W + b, with b a 1 x cols(W) row broadcast over rows of x.
Tensor2 LinearForward(const Tensor2& x, const Tensor2& w, const Tensor2& b);

struct LinearGrads {
  Tensor2 dx, dw, db;
};
LinearGrads LinearBackward(const Tensor2& x, const Tensor2& w, const Tensor2& dy);

// Mean over the rows whose mask entry is true. Returns a 1 x cols row.
Tensor2 MeanPool(const Tensor2& tokens, const std::vector<bool>& mask);
// Scatters d(pooled) back as 1/n to each unmasked row.
Tensor2 MeanPoolBackward(const Tensor2& dpooled, const std::vector<bool>& mask);

Tensor2 TanhForward(const Tensor2& x);
// Takes the forward output y = tanh(x).
Tensor2 TanhBackward(const Tensor2& y, const Tensor2& dy);

Tensor2 SoftmaxRows(const Tensor2& logits);

struct LossAndGrad {
  double loss = 0;
  Tensor2 grad;
};
// Mean negative log-likelihood over the batch; grad = (softmax - onehot)/B.
LossAndGrad SoftmaxCrossEntropy(const Tensor2& logits, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Adam with decoupled weight decay.

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig config;
  ParamSet m;
  ParamSet v;
  int64_t step = 0;

  static AdamState For(const ParamSet& params, AdamConfig config);
};

// param <- param - lr*wd*param, then the bias-corrected Adam delta.
void AdamStep(ParamSet& params, const ParamSet& grads, AdamState& state);

// ---------------------------------------------------------------------------
// Flat parameter vectors.

struct TensorSpec {
  std::string name;
  size_t rows = 0, cols = 0;
  bool operator==(const TensorSpec&) const = default;
};
using ParamSchema = std::vector<TensorSpec>;

ParamSchema SchemaOf(const ParamSet& params);
std::vector<double> Flatten(const ParamSet& params);
ParamSet Unflatten(std::span<const double> flat, const ParamSchema& schema);

// ---------------------------------------------------------------------------
// Finite-difference gradient check.

struct GradCheckOptions {
  double eps = 1e-5;
  size_t max_coords = 10000;  // sampled above this many coordinates
  uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0;
  size_t checked = 0;
  std::string worst;  // "name[r,c]"
};

// Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-6).
double RelativeError(double analytic, double numeric);

// Compares `analytic` against central differences of `loss` around
// `params`. `params` is perturbed in place and restored.
GradCheckResult GradCheck(ParamSet& params, const std::function<double(const ParamSet&)>& loss,
                          const ParamSet& analytic, GradCheckOptions options = {});

}  // namespace climsoup::nn

#endif  // CLIMSOUP_NNCORE_H_
