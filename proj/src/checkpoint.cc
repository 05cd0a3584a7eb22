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

#include <bit>
#include <cstring>

#include "climsoup/common.h"

namespace climsoup {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json HyperToJson(const HyperConfig& h) {
  ordered_json j;
  j["learning_rate"] = h.learning_rate;
  j["weight_decay"] = h.weight_decay;
  j["epochs"] = h.epochs;
  j["batch"] = h.batch;
  j["seed"] = h.seed;
  return j;
}

HyperConfig HyperFromJson(const json& j) {
  HyperConfig h;
  h.learning_rate = j.at("learning_rate").get<double>();
  h.weight_decay = j.value("weight_decay", 0.0);
  h.epochs = j.value("epochs", 10);
  h.batch = j.value("batch", 32);
  h.seed = j.value("seed", uint64_t{0});
  return h;
}

namespace {

void AppendLittleEndian(std::string& out, double v) {
  uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double ReadLittleEndian(const char* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::filesystem::path Stem(const std::filesystem::path& path) {
  auto ext = path.extension();
  if (ext == ".json" || ext == ".bin") {
    auto p = path;
    p.replace_extension();
    return p;
  }
  return path;
}

std::filesystem::path WithSuffix(const std::filesystem::path& stem, const char* suffix) {
  return stem.string() + suffix;
}

}  // namespace

std::string ParamDigest(const nn::ParamSet& params) {
  std::string bytes;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& t = params.tensor(i);
    bytes += params.name(i) + ":" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ";";
    for (double v : t.values()) AppendLittleEndian(bytes, v);
  }
  return HexU64(Fnv1a64(bytes));
}

std::filesystem::path SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& stem_in) {
  const auto stem = Stem(stem_in);
  std::string blob;
  blob.reserve(ckpt.params.NumValues() * 8);
  ordered_json manifest;
  manifest["format"] = "climsoup-checkpoint/1";
  manifest["id"] = ckpt.id;
  manifest["kind"] = ckpt.kind;
  manifest["shared_init_id"] = ckpt.shared_init_id;
  manifest["hyper"] = ckpt.hyper ? HyperToJson(*ckpt.hyper) : ordered_json(nullptr);
  manifest["val_accuracy"] = ckpt.val_accuracy ? ordered_json(*ckpt.val_accuracy) : ordered_json(nullptr);
  manifest["payload"] = stem.filename().string() + ".bin";
  manifest["tensors"] = ordered_json::array();
  for (size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& t = ckpt.params.tensor(i);
    ordered_json entry;
    entry["name"] = ckpt.params.name(i);
    entry["shape"] = {t.rows(), t.cols()};
    entry["offset"] = blob.size();
    manifest["tensors"].push_back(entry);
    for (double v : t.values()) AppendLittleEndian(blob, v);
  }
  manifest["payload_bytes"] = blob.size();
  manifest["param_digest"] = ParamDigest(ckpt.params);
  manifest["meta"] = ckpt.meta;
  WriteFile(WithSuffix(stem, ".bin"), blob);
  const auto manifest_path = WithSuffix(stem, ".json");
  WriteFile(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  const auto stem = Stem(path);
  const auto manifest_path = WithSuffix(stem, ".json");
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(ReadFile(manifest_path));
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  try {
    const auto blob_path = stem.parent_path() / manifest.at("payload").get<std::string>();
    const std::string blob = ReadFile(blob_path);
    if (blob.size() != manifest.at("payload_bytes").get<size_t>()) {
      throw DataError("checkpoint payload size mismatch: " + blob_path.string());
    }
    Checkpoint ckpt;
    ckpt.id = manifest.at("id").get<std::string>();
    ckpt.kind = manifest.at("kind").get<std::string>();
    ckpt.shared_init_id = manifest.at("shared_init_id").get<std::string>();
    if (!manifest.at("hyper").is_null()) ckpt.hyper = HyperFromJson(manifest.at("hyper"));
    if (!manifest.at("val_accuracy").is_null()) ckpt.val_accuracy = manifest.at("val_accuracy").get<double>();
    ckpt.meta = manifest.value("meta", ordered_json::object());
    for (const auto& entry : manifest.at("tensors")) {
      const size_t rows = entry.at("shape").at(0).get<size_t>();
      const size_t cols = entry.at("shape").at(1).get<size_t>();
      const size_t offset = entry.at("offset").get<size_t>();
      if (offset + rows * cols * 8 > blob.size()) {
        throw DataError("checkpoint tensor overruns payload: " + entry.at("name").get<std::string>());
      }
      std::vector<double> values(rows * cols);
      for (size_t k = 0; k < values.size(); ++k) values[k] = ReadLittleEndian(blob.data() + offset + 8 * k);
      ckpt.params.Add(entry.at("name").get<std::string>(), nn::Tensor2(rows, cols, std::move(values)));
    }
    if (manifest.contains("param_digest") &&
        manifest["param_digest"].get<std::string>() != ParamDigest(ckpt.params)) {
      throw DataError("checkpoint digest mismatch: " + manifest_path.string());
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
}

}  // namespace climsoup
