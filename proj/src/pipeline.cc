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

#include "climsoup/pipeline.h"

#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "climsoup/common.h"
#include "climsoup/csv.h"
#include "climsoup/metrics.h"
#include "climsoup/soup.h"
#include "climsoup/stance.h"
#include "climsoup/themes.h"
#include "climsoup/tokenizer.h"

namespace climsoup {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string> kTopKeys = {"paths", "seed", "split", "vocab", "embedder", "sweep",
                                        "baseline", "flags"};

fs::path Resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void RejectUnknown(const json& obj, const std::set<std::string>& allowed, std::string_view where) {
  for (const auto& [key, unused] : obj.items()) {
    if (!allowed.count(key)) throw UsageError(fmt::format("config: unknown key '{}' in {}", key, where));
  }
}

template <typename T>
T Get(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config: bad value for '{}': {}", key, e.what()));
  }
}

void RequireFile(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) throw UsageError(fmt::format("config: {} '{}' does not exist", what, p.string()));
}

// Stage -> (subdirectory, manifest file).
std::pair<std::string, std::string> ManifestLocation(std::string_view stage) {
  static const std::map<std::string, std::string, std::less<>> kDir = {
      {"ingest", "corpus"},     {"split", "splits"}, {"train-embed", "checkpoints"},
      {"assign-themes", "corpus"}, {"sweep", "checkpoints"}, {"soup", "soups"},
      {"eval", "reports"},      {"analyze", "reports"}};
  auto it = kDir.find(stage);
  if (it == kDir.end()) throw std::invalid_argument("unknown stage");
  return {it->second, std::string(stage) + ".manifest.json"};
}

std::vector<LabeledAd> LoadLabeled(const fs::path& workdir) {
  IngestResult ads = Ingest(workdir / "corpus" / "ads.jsonl", CorpusFormat::kJsonl);
  if (!ads.rejected.empty()) throw DataError("corpus/ads.jsonl has invalid records; rerun ingest");
  return PropagateStance(ads.corpus, LoadRegistry(workdir / "corpus" / "registry.csv")).labeled;
}

std::map<std::string, std::string> LoadThemeMap(const fs::path& workdir) {
  std::map<std::string, std::string> out;
  for (auto& a : ParseAssignments(ReadFile(workdir / "corpus" / "theme_assignments.csv"))) {
    out[a.ad_id] = a.theme_id;
  }
  return out;
}

ordered_json ScoreJson(const ModelScore& s) {
  ordered_json j;
  j["id"] = s.id;
  j["val_accuracy"] = s.val_accuracy ? ordered_json(*s.val_accuracy) : ordered_json(nullptr);
  j["test_accuracy"] = s.accuracy;
  j["test_macro_f1"] = s.macro_f1;
  return j;
}

std::vector<std::string> StanceNames() {
  return {std::string(StanceName(StanceLabel::kProEnergy)), std::string(StanceName(StanceLabel::kCleanEnergy)),
          std::string(StanceName(StanceLabel::kNeutral))};
}

}  // namespace

RunConfig ParseRunConfig(std::string_view json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw UsageError("config must be a JSON object");
  RejectUnknown(root, kTopKeys, "config");

  RunConfig c;
  json canon;
  const json paths = root.value("paths", json::object());
  RejectUnknown(paths, {"corpus", "corpus_format", "registry", "themes", "keywords", "annotations", "workdir"},
                "paths");
  for (const char* key : {"corpus", "registry", "themes", "keywords", "workdir"}) {
    if (!paths.contains(key)) throw UsageError(fmt::format("config: paths.{} is required", key));
  }
  c.corpus = Resolve(base_dir, Get<std::string>(paths, "corpus", ""));
  c.registry = Resolve(base_dir, Get<std::string>(paths, "registry", ""));
  c.themes = Resolve(base_dir, Get<std::string>(paths, "themes", ""));
  c.keywords = Resolve(base_dir, Get<std::string>(paths, "keywords", ""));
  c.workdir = Resolve(base_dir, Get<std::string>(paths, "workdir", ""));
  const std::string format = Get<std::string>(paths, "corpus_format", "jsonl");
  try {
    c.corpus_format = ParseCorpusFormat(format);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  if (paths.contains("annotations")) c.annotations = Resolve(base_dir, Get<std::string>(paths, "annotations", ""));
  canon["paths"] = paths;
  canon["paths"]["corpus_format"] = format;
  // Where outputs land does not change what they contain.
  canon["paths"].erase("workdir");

  c.seed = Get<uint64_t>(root, "seed", 0);
  canon["seed"] = c.seed;

  const json split = root.value("split", json::object());
  RejectUnknown(split, {"test_frac", "val_frac"}, "split");
  c.split.test_frac = Get<double>(split, "test_frac", 0.2);
  c.split.val_frac = Get<double>(split, "val_frac", 0.2);
  if (!(c.split.test_frac > 0 && c.split.val_frac > 0 && c.split.test_frac < 1 && c.split.val_frac < 1)) {
    throw UsageError("config: split fractions must lie in (0, 1)");
  }
  canon["split"] = {{"test_frac", c.split.test_frac}, {"val_frac", c.split.val_frac}};

  const json vocab = root.value("vocab", json::object());
  RejectUnknown(vocab, {"max_size"}, "vocab");
  c.vocab_max = Get<size_t>(vocab, "max_size", 20000);
  canon["vocab"] = {{"max_size", c.vocab_max}};

  const json emb = root.value("embedder", json::object());
  RejectUnknown(emb, {"dim", "epochs", "batch", "lr", "scale"}, "embedder");
  c.embedder.dim = Get<size_t>(emb, "dim", 64);
  c.embedder.epochs = Get<int>(emb, "epochs", 5);
  c.embedder.batch = Get<int>(emb, "batch", 32);
  c.embedder.lr = Get<double>(emb, "lr", 1e-3);
  c.embedder.scale = Get<double>(emb, "scale", kDefaultSimilarityScale);
  c.embedder.seed = DeriveSeed(c.seed, "embedder");
  canon["embedder"] = {{"dim", c.embedder.dim}, {"epochs", c.embedder.epochs}, {"batch", c.embedder.batch},
                       {"lr", c.embedder.lr},   {"scale", c.embedder.scale}};

  const json sweep = root.value("sweep", json::object());
  RejectUnknown(sweep, {"grid", "epochs", "batch", "lr_scale", "hidden"}, "sweep");
  if (sweep.contains("grid") && !(sweep["grid"].is_string() && sweep["grid"] == "default")) {
    if (!sweep["grid"].is_array() || sweep["grid"].empty()) {
      throw UsageError("config: sweep.grid must be \"default\" or a non-empty array");
    }
    for (const auto& g : sweep["grid"]) {
      c.grid.push_back({Get<double>(g, "learning_rate", 0), Get<double>(g, "weight_decay", 0)});
    }
  }
  c.sweep_epochs = Get<int>(sweep, "epochs", 10);
  c.sweep_batch = Get<int>(sweep, "batch", 32);
  c.lr_scale = Get<double>(sweep, "lr_scale", 1.0);
  c.hidden = Get<size_t>(sweep, "hidden", kDefaultHidden);
  if (!(c.lr_scale > 0)) throw UsageError("config: sweep.lr_scale must be positive");
  if (c.sweep_epochs < 0 || c.sweep_batch < 1 || c.hidden < 1) throw UsageError("config: bad sweep settings");
  canon["sweep"] = {{"epochs", c.sweep_epochs}, {"batch", c.sweep_batch}, {"lr_scale", c.lr_scale},
                    {"hidden", c.hidden}};
  canon["sweep"]["grid"] = json::array();
  for (const auto& h : EffectiveGrid(c)) {
    canon["sweep"]["grid"].push_back({{"learning_rate", h.learning_rate}, {"weight_decay", h.weight_decay}});
  }

  const json base = root.value("baseline", json::object());
  RejectUnknown(base, {"c", "max_iter"}, "baseline");
  c.baseline_c = Get<double>(base, "c", 1.0);
  c.baseline_max_iter = Get<int>(base, "max_iter", 5000);
  canon["baseline"] = {{"c", c.baseline_c}, {"max_iter", c.baseline_max_iter}};

  const json flags = root.value("flags", json::object());
  RejectUnknown(flags, {"theme_ablation", "strict_greedy", "weight_kind", "contingency_mode", "analysis_model"},
                "flags");
  c.theme_ablation = Get<bool>(flags, "theme_ablation", false);
  c.strict_greedy = Get<bool>(flags, "strict_greedy", false);
  c.weight_kind = analytics::ParseWeightKind(Get<std::string>(flags, "weight_kind", "spend_mid"));
  c.contingency_mode = analytics::ParseCountMode(Get<std::string>(flags, "contingency_mode", "impressions"));
  c.analysis_model = Get<std::string>(flags, "analysis_model", "uniform_soup");
  if (c.analysis_model != "uniform_soup" && c.analysis_model != "greedy_soup") {
    throw UsageError("config: flags.analysis_model must be uniform_soup or greedy_soup");
  }
  canon["flags"] = {{"theme_ablation", c.theme_ablation},
                    {"strict_greedy", c.strict_greedy},
                    {"weight_kind", std::string(analytics::WeightKindName(c.weight_kind))},
                    {"contingency_mode", std::string(analytics::CountModeName(c.contingency_mode))},
                    {"analysis_model", c.analysis_model}};

  RequireFile(c.corpus, "corpus");
  RequireFile(c.registry, "registry");
  RequireFile(c.themes, "phrase bank");
  RequireFile(c.keywords, "keyword list");
  if (c.annotations) RequireFile(*c.annotations, "annotation file");

  c.canonical = canon;
  c.hash = HexU64(Fnv1a64(canon.dump()));
  return c;
}

RunConfig LoadRunConfig(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("config file '" + path.string() + "' does not exist");
  return ParseRunConfig(ReadFile(path), path.parent_path());
}

std::vector<HyperConfig> EffectiveGrid(const RunConfig& config) {
  std::vector<HyperConfig> grid;
  const uint64_t seed = DeriveSeed(config.seed, "sweep");
  if (config.grid.empty()) {
    grid = DefaultGrid(seed);
  } else {
    for (const auto& g : config.grid) grid.push_back({.learning_rate = g.learning_rate, .weight_decay = g.weight_decay});
  }
  for (auto& h : grid) {
    h.learning_rate *= config.lr_scale;
    h.epochs = config.sweep_epochs;
    h.batch = config.sweep_batch;
    h.seed = seed;
  }
  return grid;
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {}

const std::vector<std::string>& Pipeline::StageNames() {
  static const std::vector<std::string> kNames = {"ingest", "split", "train-embed", "assign-themes",
                                                  "sweep",  "soup",  "eval",        "analyze"};
  return kNames;
}

ordered_json Pipeline::Meta() const {
  ordered_json m;
  m["config_hash"] = config_.hash;
  m["seed"] = config_.seed;
  return m;
}

std::string Pipeline::CsvStamp() const { return fmt::format("config_hash={};seed={}", config_.hash, config_.seed); }

void Pipeline::WriteManifest(std::string_view stage, ordered_json body,
                             const std::vector<std::string>& outputs) const {
  auto [dir, file] = ManifestLocation(stage);
  ordered_json m;
  m["stage"] = stage;
  m["meta"] = Meta();
  m["status"] = "complete";
  m["outputs"] = ordered_json::array();
  for (const auto& rel : outputs) {
    m["outputs"].push_back({{"path", rel}, {"fnv1a64", HexU64(Fnv1a64(ReadFile(config_.workdir / rel)))}});
  }
  m["summary"] = std::move(body);
  WriteFile(config_.workdir / dir / file, m.dump(2) + "\n");
}

ordered_json Pipeline::RequireStage(std::string_view stage) const {
  auto [dir, file] = ManifestLocation(stage);
  const fs::path p = config_.workdir / dir / file;
  if (!fs::exists(p)) {
    throw DataError(fmt::format("missing manifest for stage '{}' ({}); run that stage first", stage, p.string()));
  }
  ordered_json m;
  try {
    m = ordered_json::parse(ReadFile(p));
  } catch (const json::exception& e) {
    throw DataError(fmt::format("malformed manifest {}: {}", p.string(), e.what()));
  }
  if (m.value("status", "") != "complete") throw DataError(fmt::format("stage '{}' did not complete", stage));
  const std::string hash = m.value("meta", ordered_json::object()).value("config_hash", "");
  if (hash != config_.hash) {
    throw DataError(fmt::format("stage '{}' was produced by config {} but this config is {}; rerun it", stage,
                                hash, config_.hash));
  }
  return m;
}

std::vector<fs::path> Pipeline::StageOutputs(std::string_view stage) const {
  auto [dir, file] = ManifestLocation(stage);
  ordered_json m = ordered_json::parse(ReadFile(config_.workdir / dir / file));
  std::vector<fs::path> out = {fs::path(dir) / file};
  for (const auto& o : m.at("outputs")) out.emplace_back(o.at("path").get<std::string>());
  return out;
}

void Pipeline::Ingest() {
  spdlog::info("ingest: {}", config_.corpus.string());
  IngestResult raw = climsoup::Ingest(config_.corpus, config_.corpus_format);
  for (const auto& d : raw.rejected) spdlog::warn("rejected record (line {}, id '{}'): {}", d.line, d.id, d.message);
  const auto keywords = LoadKeywords(config_.keywords);
  Corpus kept = FilterKeywords(raw.corpus, keywords);
  const auto registry = LoadRegistry(config_.registry);
  LabeledCorpus lc = PropagateStance(kept, registry);
  if (lc.labeled.empty()) throw DataError("no ad is funded by an entity with a known stance");

  WriteFile(Dir("corpus") / "ads.jsonl", SerializeJsonl(kept));
  WriteFile(Dir("corpus") / "registry.csv", SerializeRegistry(registry));
  csv::Writer labels;
  labels.Comment(CsvStamp());
  labels.WriteRow({"ad_id", "funding_entity", "stance"});
  for (const auto& la : lc.labeled) labels.WriteRow({la.ad.id, la.ad.funding_entity, std::string(StanceName(la.stance))});
  WriteFile(Dir("corpus") / "labels.csv", labels.str());
  csv::Writer rej;
  rej.Comment(CsvStamp());
  rej.WriteRow({"line", "id", "reason"});
  for (const auto& d : raw.rejected) rej.WriteRow({std::to_string(d.line), d.id, d.message});
  WriteFile(Dir("corpus") / "rejected.csv", rej.str());

  std::map<std::string, size_t> by_stance;
  for (const auto& la : lc.labeled) ++by_stance[std::string(StanceName(la.stance))];
  ordered_json s;
  s["records_read"] = raw.corpus.size() + raw.rejected.size();
  s["rejected"] = raw.rejected.size();
  s["keyword_filtered_out"] = raw.corpus.size() - kept.size();
  s["kept"] = kept.size();
  s["labeled"] = lc.labeled.size();
  s["unlabeled"] = lc.unlabeled.size();
  s["labeled_by_stance"] = by_stance;
  WriteManifest("ingest", s, {"corpus/ads.jsonl", "corpus/registry.csv", "corpus/labels.csv", "corpus/rejected.csv"});
  spdlog::info("ingest: kept {} of {} ads, {} labeled", kept.size(), raw.corpus.size(), lc.labeled.size());
}

void Pipeline::Split() {
  RequireStage("ingest");
  const auto labeled = LoadLabeled(config_.workdir);
  SplitAssignment split = SplitByEntity(labeled, DeriveSeed(config_.seed, "split"), config_.split);
  std::string text = "# " + CsvStamp() + "\n" + SerializeSplit(split);
  WriteFile(Dir("splits") / "split.csv", text);
  ordered_json s;
  for (auto sp : {Split::kTrain, Split::kVal, Split::kTest}) {
    const std::string name(SplitName(sp));
    s[name] = {{"entities", split.Entities(sp).size()}, {"ads", split.Select(labeled, sp).size()}};
  }
  WriteManifest("split", s, {"splits/split.csv"});
  spdlog::info("split: {}", s.dump());
}

void Pipeline::TrainEmbed() {
  RequireStage("ingest");
  IngestResult ads = climsoup::Ingest(Dir("corpus") / "ads.jsonl", CorpusFormat::kJsonl);
  const PhraseBank bank = LoadPhraseBank(config_.themes);
  std::vector<std::string> texts;
  for (const auto& ad : ads.corpus) {
    texts.push_back(ad.body);
    if (ad.description) texts.push_back(*ad.description);
  }
  for (const auto& t : bank) texts.insert(texts.end(), t.phrases.begin(), t.phrases.end());
  const Vocabulary vocab = Vocabulary::Build(texts, config_.vocab_max, ThemeTokens(bank));
  const auto pairs = MakePairs(ads.corpus);
  ContrastiveResult r = TrainContrastive(pairs, vocab, config_.embedder);
  r.checkpoint.meta["config_hash"] = config_.hash;
  r.checkpoint.meta["config_seed"] = config_.seed;

  WriteFile(Dir("checkpoints") / "vocab.txt", vocab.Serialize());
  SaveCheckpoint(r.checkpoint, Dir("checkpoints") / "encoder");
  ordered_json s;
  s["vocab_size"] = vocab.size();
  s["pairs"] = pairs.size();
  s["initial_loss"] = r.initial_loss;
  s["epoch_losses"] = r.epoch_losses;
  s["mean_rank"] = r.mean_rank;
  s["warnings"] = r.warnings;
  s["shared_init_id"] = r.checkpoint.shared_init_id;
  WriteManifest("train-embed", s, {"checkpoints/vocab.txt", "checkpoints/encoder.json", "checkpoints/encoder.bin"});
  spdlog::info("train-embed: loss {} -> {}", FormatDouble(r.initial_loss),
               r.epoch_losses.empty() ? "n/a" : FormatDouble(r.epoch_losses.back()));
}

void Pipeline::AssignThemes() {
  RequireStage("ingest");
  RequireStage("train-embed");
  IngestResult ads = climsoup::Ingest(Dir("corpus") / "ads.jsonl", CorpusFormat::kJsonl);
  const PhraseBank bank = LoadPhraseBank(config_.themes);
  const Vocabulary vocab = Vocabulary::Parse(ReadFile(Dir("checkpoints") / "vocab.txt"));
  const Checkpoint enc = LoadCheckpoint(Dir("checkpoints") / "encoder");
  ThemeIndex index(bank, vocab, enc.params);
  std::vector<ThemeAssignment> assignments;
  for (const auto& ad : ads.corpus) assignments.push_back(index.Assign(ad));
  WriteFile(Dir("corpus") / "theme_assignments.csv", "# " + CsvStamp() + "\n" + SerializeAssignments(assignments));

  std::vector<std::string> outputs = {"corpus/theme_assignments.csv"};
  ordered_json s;
  s["assigned"] = assignments.size();
  if (config_.annotations) {
    const auto gold = LoadAnnotations(*config_.annotations);
    ThemeAudit audit = EvalThemes(assignments, gold, bank);
    ThemeAudit chance = EvalThemes(RandomAssignments(gold, bank, DeriveSeed(config_.seed, "theme-chance")), gold, bank);
    ordered_json rep;
    rep["meta"] = Meta();
    rep["annotated"] = audit.n;
    rep["accuracy"] = audit.accuracy;
    rep["macro_f1"] = audit.macro_f1;
    rep["random_accuracy"] = chance.accuracy;
    rep["random_macro_f1"] = chance.macro_f1;
    rep["chance_level"] = 1.0 / static_cast<double>(bank.size());
    WriteFile(Dir("reports") / "theme_audit.json", rep.dump(2) + "\n");
    outputs.push_back("reports/theme_audit.json");
    s["audit_accuracy"] = audit.accuracy;
    s["random_accuracy"] = chance.accuracy;
    spdlog::info("assign-themes: audit accuracy {} (random {})", FormatDouble(audit.accuracy),
                 FormatDouble(chance.accuracy));
  }
  WriteManifest("assign-themes", s, outputs);
}

namespace {

struct StanceData {
  Vocabulary vocab;
  Checkpoint encoder;
  std::vector<LabeledAd> labeled;
  SplitAssignment split;
  std::map<std::string, std::string> themes;
  std::vector<StanceExample> train, val, test;
};

StanceData LoadStanceData(const RunConfig& config) {
  StanceData d;
  const fs::path& w = config.workdir;
  d.vocab = Vocabulary::Parse(ReadFile(w / "checkpoints" / "vocab.txt"));
  d.encoder = LoadCheckpoint(w / "checkpoints" / "encoder");
  d.labeled = LoadLabeled(w);
  d.split = ParseSplitCsv(ReadFile(w / "splits" / "split.csv"));
  d.themes = LoadThemeMap(w);
  const auto* themes = config.theme_ablation ? nullptr : &d.themes;
  d.train = MakeExamples(d.split.Select(d.labeled, Split::kTrain), d.vocab, themes);
  d.val = MakeExamples(d.split.Select(d.labeled, Split::kVal), d.vocab, themes);
  d.test = MakeExamples(d.split.Select(d.labeled, Split::kTest), d.vocab, themes);
  if (d.train.empty() || d.val.empty() || d.test.empty()) throw DataError("a split holds no labeled ads");
  return d;
}

std::vector<Checkpoint> LoadSweep(const fs::path& workdir, const ordered_json& manifest) {
  std::vector<Checkpoint> out;
  for (const auto& id : manifest.at("summary").at("checkpoints")) {
    out.push_back(LoadCheckpoint(workdir / "checkpoints" / "sweep" / id.get<std::string>()));
  }
  return out;
}

ModelScore Score(const std::string& id, const nn::ParamSet& params, const std::vector<StanceExample>& test,
                 std::optional<double> val_accuracy) {
  auto preds = Predict(params, test);
  std::vector<int> p, g;
  for (size_t i = 0; i < test.size(); ++i) {
    p.push_back(static_cast<int>(preds[i].label));
    g.push_back(test[i].label);
  }
  auto rep = metrics::Evaluate(p, g, kNumStances);
  return {id, rep.accuracy, rep.macro_f1, val_accuracy};
}

}  // namespace

void Pipeline::Sweep() {
  RequireStage("split");
  RequireStage("train-embed");
  RequireStage("assign-themes");
  StanceData d = LoadStanceData(config_);
  const auto grid = EffectiveGrid(config_);
  auto ckpts = climsoup::Sweep(d.encoder, d.train, d.val, grid, {.hidden = config_.hidden});
  std::vector<std::string> outputs;
  ordered_json s;
  s["checkpoints"] = ordered_json::array();
  s["val_accuracy"] = ordered_json::object();
  s["lr_scale"] = config_.lr_scale;
  s["theme_ablation"] = config_.theme_ablation;
  s["train_examples"] = d.train.size();
  s["val_examples"] = d.val.size();
  for (auto& ck : ckpts) {
    ck.meta["config_hash"] = config_.hash;
    ck.meta["config_seed"] = config_.seed;
    SaveCheckpoint(ck, Dir("checkpoints") / "sweep" / ck.id);
    outputs.push_back("checkpoints/sweep/" + ck.id + ".json");
    outputs.push_back("checkpoints/sweep/" + ck.id + ".bin");
    s["checkpoints"].push_back(ck.id);
    s["val_accuracy"][ck.id] = *ck.val_accuracy;
  }
  WriteManifest("sweep", s, outputs);
}

void Pipeline::Soup() {
  ordered_json sweep_manifest = RequireStage("sweep");
  StanceData d = LoadStanceData(config_);
  auto ckpts = LoadSweep(config_.workdir, sweep_manifest);
  for (const auto& ck : ckpts) CheckStanceSchema(ck.params, d.vocab);

  SoupResult uniform = UniformSoup(ckpts);
  uniform.soup.val_accuracy = EvalAccuracy(uniform.soup.params, d.val);
  ValEval val_eval = [&d](const nn::ParamSet& p) { return EvalAccuracy(p, d.val); };
  SoupResult greedy = GreedySoup(ckpts, val_eval, {.strict = config_.strict_greedy});
  for (auto* r : {&uniform, &greedy}) {
    r->soup.meta["config_hash"] = config_.hash;
    r->soup.meta["config_seed"] = config_.seed;
    SaveCheckpoint(r->soup, Dir("soups") / r->soup.id);
  }
  ordered_json trace = SoupTraceToJson(greedy);
  trace["strict"] = config_.strict_greedy;
  trace["meta"] = Meta();
  WriteFile(Dir("soups") / "greedy_trace.json", trace.dump(2) + "\n");

  ordered_json s;
  s["uniform_val_accuracy"] = *uniform.soup.val_accuracy;
  s["greedy_val_accuracy"] = *greedy.soup.val_accuracy;
  s["greedy_ingredients"] = greedy.ingredients;
  double best = 0;
  for (const auto& ck : ckpts) best = std::max(best, *ck.val_accuracy);
  s["best_individual_val_accuracy"] = best;
  WriteManifest("soup", s,
                {"soups/uniform_soup.json", "soups/uniform_soup.bin", "soups/greedy_soup.json",
                 "soups/greedy_soup.bin", "soups/greedy_trace.json"});
  spdlog::info("soup: uniform val {} greedy val {} ({} ingredients), best individual {}",
               FormatDouble(*uniform.soup.val_accuracy), FormatDouble(*greedy.soup.val_accuracy),
               greedy.ingredients.size(), FormatDouble(best));
}

EvalSummary Pipeline::Eval() {
  ordered_json sweep_manifest = RequireStage("sweep");
  RequireStage("soup");
  StanceData d = LoadStanceData(config_);
  auto ckpts = LoadSweep(config_.workdir, sweep_manifest);
  const Checkpoint uniform = LoadCheckpoint(Dir("soups") / "uniform_soup");
  const Checkpoint greedy = LoadCheckpoint(Dir("soups") / "greedy_soup");

  EvalSummary sum;
  for (const auto& ck : ckpts) {
    CheckStanceSchema(ck.params, d.vocab);
    sum.sweep.push_back(Score(ck.id, ck.params, d.test, ck.val_accuracy));
  }
  sum.uniform_soup = Score("uniform_soup", uniform.params, d.test, uniform.val_accuracy);
  sum.greedy_soup = Score("greedy_soup", greedy.params, d.test, greedy.val_accuracy);

  // Text-only baseline over the ad bodies.
  std::vector<std::string> train_docs, test_docs;
  std::vector<int> train_y, test_y;
  for (const auto& la : d.split.Select(d.labeled, Split::kTrain)) {
    train_docs.push_back(la.ad.body);
    train_y.push_back(static_cast<int>(la.stance));
  }
  for (const auto& la : d.split.Select(d.labeled, Split::kTest)) {
    test_docs.push_back(la.ad.body);
    test_y.push_back(static_cast<int>(la.stance));
  }
  TfidfModel lr = TrainTfidfLr(train_docs, train_y, {.max_iter = config_.baseline_max_iter, .c = config_.baseline_c});
  std::vector<int> lr_pred;
  for (const auto& p : PredictTfidf(lr, test_docs)) lr_pred.push_back(static_cast<int>(p.label));
  auto lr_rep = metrics::Evaluate(lr_pred, test_y, kNumStances);
  sum.baseline = {"tfidf_lr", lr_rep.accuracy, lr_rep.macro_f1, std::nullopt};

  ordered_json rep;
  rep["meta"] = Meta();
  rep["test_examples"] = d.test.size();
  rep["models"] = ordered_json::array();
  csv::Writer table;
  table.Comment(CsvStamp());
  table.WriteRow({"model", "val_accuracy", "test_accuracy", "test_macro_f1"});
  auto add = [&](const ModelScore& s) {
    rep["models"].push_back(ScoreJson(s));
    table.WriteRow({s.id, s.val_accuracy ? FormatDouble(*s.val_accuracy) : "", FormatDouble(s.accuracy),
                    FormatDouble(s.macro_f1)});
  };
  for (const auto& s : sum.sweep) add(s);
  add(sum.uniform_soup);
  add(sum.greedy_soup);
  add(sum.baseline);
  rep["baseline"] = {{"iterations", lr.iterations}, {"final_grad_norm", lr.final_grad_norm}};

  // Full per-class reports for the soups.
  for (const auto* ck : {&uniform, &greedy}) {
    auto preds = Predict(ck->params, d.test);
    std::vector<int> p, g;
    for (size_t i = 0; i < d.test.size(); ++i) {
      p.push_back(static_cast<int>(preds[i].label));
      g.push_back(d.test[i].label);
    }
    rep["reports"][ck->id] = metrics::ReportToJson(metrics::Evaluate(p, g, kNumStances), StanceNames());
  }
  WriteFile(Dir("reports") / "eval.json", rep.dump(2) + "\n");
  WriteFile(Dir("reports") / "eval.csv", table.str());

  // Predictions of the analysis model over every labeled ad.
  const Checkpoint& chosen = config_.analysis_model == "greedy_soup" ? greedy : uniform;
  const auto* themes = config_.theme_ablation ? nullptr : &d.themes;
  auto all = MakeExamples(d.labeled, d.vocab, themes);
  if (config_.theme_ablation) {
    for (auto& ex : all) {
      auto it = d.themes.find(ex.ad_id);
      if (it != d.themes.end()) ex.theme_id = it->second;
    }
  }
  WriteFile(Dir("reports") / "predictions.csv",
            SerializePredictions(all, Predict(chosen.params, all), CsvStamp() + ";model=" + chosen.id));

  WriteManifest("eval", {{"uniform_soup", ScoreJson(sum.uniform_soup)}, {"greedy_soup", ScoreJson(sum.greedy_soup)}},
                {"reports/eval.json", "reports/eval.csv", "reports/predictions.csv"});
  return sum;
}

void Pipeline::Analyze() {
  RequireStage("eval");
  RequireStage("assign-themes");
  const auto labeled = LoadLabeled(config_.workdir);
  const auto themes = LoadThemeMap(config_.workdir);
  std::map<std::string, StanceLabel> predicted;
  for (const auto& r : ParsePredictions(ReadFile(Dir("reports") / "predictions.csv"))) predicted[r.ad_id] = r.predicted;
  const auto registry = LoadRegistry(Dir("corpus") / "registry.csv");

  auto to_analysis = [&themes](const std::vector<LabeledAd>& ads) {
    std::vector<analytics::AnalysisAd> out;
    for (const auto& la : ads) {
      auto it = themes.find(la.ad.id);
      out.push_back({la.ad, la.stance, it == themes.end() ? "" : it->second});
    }
    return out;
  };
  const auto all = to_analysis(labeled);
  const auto correct = to_analysis(analytics::FilterCorrect(labeled, predicted));
  const fs::path out = Dir("reports") / "analytics";
  const std::string stamp = CsvStamp();

  std::vector<analytics::AggregateRow> theme_rows;
  for (auto k : {analytics::WeightKind::kAdCount, analytics::WeightKind::kImpressions, analytics::WeightKind::kSpend}) {
    auto rows = analytics::ThemeDistribution(correct, k, &all);
    theme_rows.insert(theme_rows.end(), rows.begin(), rows.end());
  }
  WriteFile(out / "theme_dist.csv", analytics::AggregateCsv(theme_rows, stamp));
  auto gender = analytics::DemoDistribution(all, analytics::DemoAxis::kGender);
  auto age = analytics::DemoDistribution(all, analytics::DemoAxis::kAge);
  auto geo = analytics::GeoDistribution(all);
  WriteFile(out / "demo_gender.csv", analytics::AggregateCsv(gender.rows, stamp));
  WriteFile(out / "demo_age.csv", analytics::AggregateCsv(age.rows, stamp));
  WriteFile(out / "geo_states.csv", analytics::AggregateCsv(geo.rows, stamp));
  WriteFile(out / "top_funders.csv", analytics::FunderCsv(analytics::TopFunders(all, 5, config_.weight_kind), stamp));
  WriteFile(out / "entity_theme_spend.csv",
            analytics::MatrixCsv(analytics::EntityThemeSpend(correct, registry), "theme_id", stamp));
  WriteFile(out / "theme_tokens.csv", analytics::TokenCsv(analytics::ThemeTokenFrequencies(correct), stamp));

  ordered_json chi;
  chi["meta"] = Meta();
  chi["primary_mode"] = analytics::CountModeName(config_.contingency_mode);
  for (auto mode : {analytics::CountMode::kImpressions, analytics::CountMode::kAdCount}) {
    for (auto [axis, name] : {std::pair{analytics::DemoAxis::kGender, "gender"}, std::pair{analytics::DemoAxis::kAge, "age"}}) {
      auto table = metrics::DropEmpty(analytics::DemoStanceTable(all, axis, mode));
      ordered_json entry;
      entry["rows"] = table.row_labels;
      entry["cols"] = table.col_labels;
      entry["counts"] = table.counts;
      try {
        entry["test"] = metrics::ChiSquareToJson(metrics::ChiSquare(table));
      } catch (const DataError& e) {
        entry["error"] = e.what();
      }
      chi[std::string(analytics::CountModeName(mode))][name] = entry;
    }
  }
  WriteFile(out / "chi_square.json", chi.dump(2) + "\n");

  ordered_json meta;
  meta["meta"] = Meta();
  meta["labeled_ads"] = all.size();
  meta["correct_ads"] = correct.size();
  meta["filters"] = {{"theme_dist.csv", "correct predictions"},
                     {"entity_theme_spend.csv", "correct predictions, pro_energy"},
                     {"theme_tokens.csv", "correct predictions"},
                     {"demo_gender.csv", "all labeled"},
                     {"demo_age.csv", "all labeled"},
                     {"geo_states.csv", "all labeled"},
                     {"top_funders.csv", "all labeled"}};
  meta["theme_share_denominators"] = {{"share", "correctly predicted ads of the stance"},
                                      {"share_of_all_labeled", "all labeled ads of the stance"}};
  meta["weight_kinds"] = {{"theme_dist.csv", {"ad_count", "impressions_mid", "spend_mid"}},
                          {"demo_*.csv", "impressions_mid"},
                          {"geo_states.csv", "impressions_mid"},
                          {"top_funders.csv", analytics::WeightKindName(config_.weight_kind)},
                          {"entity_theme_spend.csv", "spend_mid"}};
  meta["excluded_missing_shares"] = {{"gender", gender.excluded}, {"age", age.excluded}, {"state", geo.excluded}};
  meta["prediction_model"] = config_.analysis_model;
  WriteFile(out / "analytics_meta.json", meta.dump(2) + "\n");

  const std::vector<std::string> files = {"theme_dist.csv", "demo_gender.csv", "demo_age.csv",
                                          "geo_states.csv", "top_funders.csv", "entity_theme_spend.csv",
                                          "theme_tokens.csv", "chi_square.json", "analytics_meta.json"};
  std::vector<std::string> outputs;
  for (const auto& f : files) outputs.push_back("reports/analytics/" + f);
  WriteManifest("analyze", {{"labeled_ads", all.size()}, {"correct_ads", correct.size()}}, outputs);
}

EvalSummary Pipeline::RunAll() {
  Ingest();
  Split();
  TrainEmbed();
  AssignThemes();
  Sweep();
  Soup();
  EvalSummary s = Eval();
  Analyze();
  return s;
}

}  // namespace climsoup
