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

#ifndef CLIMSOUP_COMMON_H_
#define CLIMSOUP_COMMON_H_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace climsoup {

// Error taxonomy. The CLI maps these onto exit codes 1 (usage), 2 (data)
// and 3 (numeric).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seeded generator with platform-independent integer and real draws.
// std::mt19937_64 output is fixed by the standard; the distributions in
// <random> are not, so we draw through our own helpers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformInt(uint64_t n);

  // Uniform real in [0, 1) with 53 random bits.
  double Uniform01();

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Standard normal via Box-Muller.
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(UniformInt(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// 64-bit FNV-1a. Stable across platforms; used for config hashes, derived
// seeds and checkpoint ids.
uint64_t Fnv1a64(std::string_view bytes, uint64_t basis = 0xcbf29ce484222325ULL);

std::string HexU64(uint64_t v);

// Combines a seed with a label into a new independent seed.
uint64_t DeriveSeed(uint64_t seed, std::string_view label);

std::string ToLowerAscii(std::string_view s);
std::string Trim(std::string_view s);
// Collapses whitespace runs to one space and trims.
std::string NormalizeWhitespace(std::string_view s);
std::vector<std::string> SplitString(std::string_view s, char sep);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view contents);

// Shortest round-trip decimal representation of a double.
std::string FormatDouble(double v);

// Round half up on non-negative values.
int64_t RoundHalfUp(double x);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace climsoup

#endif  // CLIMSOUP_COMMON_H_
