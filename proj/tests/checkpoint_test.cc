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

#include "climsoup/checkpoint.h"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "climsoup/common.h"

namespace climsoup {
namespace {

namespace fs = std::filesystem;

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("climsoup_ckpt_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static Checkpoint Sample() {
    Checkpoint c;
    c.id = "hyper03";
    c.kind = "stance";
    c.params.Add("embed", nn::Tensor2(3, 2, {0.1, -0.2, 1e-300, 3.5, -0.0, 1.0 / 3}));
    c.params.Add("head_b2", nn::Tensor2(1, 3, {1, 2, 3}));
    c.shared_init_id = "abc123";
    c.hyper = HyperConfig{3e-5, 0.001, 10, 32, 7};
    c.val_accuracy = 0.8125;
    c.meta["epoch_losses"] = {1.0, 0.5};
    return c;
  }

  fs::path dir_;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  Checkpoint c = Sample();
  fs::path manifest = SaveCheckpoint(c, dir_ / "hyper03");
  EXPECT_EQ(manifest.extension(), ".json");
  EXPECT_TRUE(fs::exists(dir_ / "hyper03.bin"));
  EXPECT_EQ(fs::file_size(dir_ / "hyper03.bin"), 9u * sizeof(double));
  Checkpoint back = LoadCheckpoint(dir_ / "hyper03");
  EXPECT_EQ(back, c);
  EXPECT_EQ(ParamDigest(back.params), ParamDigest(c.params));
  EXPECT_EQ(LoadCheckpoint(manifest), c);
}

TEST_F(CheckpointTest, OptionalFieldsStayAbsent) {
  Checkpoint c = Sample();
  c.hyper.reset();
  c.val_accuracy.reset();
  SaveCheckpoint(c, dir_ / "x");
  Checkpoint back = LoadCheckpoint(dir_ / "x");
  EXPECT_FALSE(back.hyper.has_value());
  EXPECT_FALSE(back.val_accuracy.has_value());
}

TEST_F(CheckpointTest, TruncatedBinaryIsRejected) {
  SaveCheckpoint(Sample(), dir_ / "t");
  fs::resize_file(dir_ / "t.bin", 5 * sizeof(double));
  EXPECT_THROW(LoadCheckpoint(dir_ / "t"), DataError);
}

TEST_F(CheckpointTest, MissingOrMalformedManifestIsRejected) {
  EXPECT_THROW(LoadCheckpoint(dir_ / "nothing"), DataError);
  SaveCheckpoint(Sample(), dir_ / "m");
  std::ofstream(dir_ / "m.json") << "{not json";
  EXPECT_THROW(LoadCheckpoint(dir_ / "m"), DataError);
}

TEST(ParamDigest, SensitiveToValuesAndNames) {
  nn::ParamSet a, b, c;
  a.Add("w", nn::Tensor2(1, 2, {1, 2}));
  b.Add("w", nn::Tensor2(1, 2, {1, 2.0000000001}));
  c.Add("v", nn::Tensor2(1, 2, {1, 2}));
  EXPECT_NE(ParamDigest(a), ParamDigest(b));
  EXPECT_NE(ParamDigest(a), ParamDigest(c));
  EXPECT_EQ(ParamDigest(a), ParamDigest(a));
}

TEST(HyperJson, RoundTrip) {
  HyperConfig h{1e-5, 0.1, 4, 16, 99};
  EXPECT_EQ(HyperFromJson(nlohmann::json::parse(HyperToJson(h).dump())), h);
}

}  // namespace
}  // namespace climsoup
