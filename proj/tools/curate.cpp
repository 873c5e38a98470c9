/*
 * Copyright 2026 The Curate Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curate/cluster.hpp"
#include "curate/dedup.hpp"
#include "curate/digest.hpp"
#include "curate/filters.hpp"
#include "curate/manifest.hpp"
#include "curate/metrics.hpp"
#include "curate/pool_io.hpp"
#include "curate/presets.hpp"
#include "curate/reshard.hpp"
#include "curate/samplers.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Config plumbing: a JSON document resolved from --config plus flag overrides.
// ---------------------------------------------------------------------------

json load_config_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw curate::IoError("cannot open config: " + path.string());
  json cfg;
  try {
    in >> cfg;
  } catch (const json::parse_error& ex) {
    throw curate::FormatError("bad config JSON in " + path.string() + ": " + ex.what());
  }
  // A provenance run.json is directly replayable: unwrap its config.
  if (cfg.is_object() && cfg.contains("config") && cfg.contains("subcommand")) {
    return cfg["config"];
  }
  return cfg;
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) {
    throw curate::ConfigError(std::string(what) + " does not exist: " + path.string());
  }
}

std::map<std::string, fs::path> parse_family_paths(const std::vector<std::string>& specs,
                                                   const char* what) {
  std::map<std::string, fs::path> out;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
      throw curate::ConfigError(std::string(what) + " must be name=path, got '" + spec + "'");
    }
    out[spec.substr(0, eq)] = spec.substr(eq + 1);
  }
  return out;
}

/// Tracks files/directories created by this run so a failure leaves nothing
/// partial behind.
class OutputTracker {
 public:
  void track(const fs::path& p) { created_.push_back(p); }
  void cleanup() {
    for (const auto& p : created_) {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  }

 private:
  std::vector<fs::path> created_;
};

// ---------------------------------------------------------------------------
// Provenance.
// ---------------------------------------------------------------------------

struct Provenance {
  std::string subcommand;
  json config;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  std::string detector;

  void add_input(const fs::path& path) {
    input_digests[path.string()] = curate::sha256_file_hex(path);
  }

  void write(const fs::path& dir) const {
    ordered_json j;
    j["tool"] = "curate";
    j["version"] = kToolVersion;
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["inputs"] = input_digests;
    j["outputs"] = outputs;
    if (!detector.empty()) j["detector"] = detector;
    std::ofstream out(dir / "run.json", std::ios::binary | std::ios::trunc);
    if (!out) throw curate::IoError("cannot write provenance: " + (dir / "run.json").string());
    out << j.dump(2) << '\n';
  }
};

// ---------------------------------------------------------------------------
// Pool loading shared by pool-consuming subcommands.
// ---------------------------------------------------------------------------

struct PoolInputs {
  fs::path metadata;
  std::map<std::string, fs::path> embeddings;
};

PoolInputs pool_inputs_from(const json& cfg) {
  PoolInputs in;
  if (!cfg.contains("pool_meta")) {
    throw curate::ConfigError("missing required --pool-meta / config key pool_meta");
  }
  in.metadata = cfg["pool_meta"].get<std::string>();
  require_file(in.metadata, "pool metadata");
  if (cfg.contains("embeddings")) {
    for (const auto& [family, path] : cfg["embeddings"].items()) {
      in.embeddings[family] = fs::path(path.get<std::string>());
      require_file(in.embeddings[family], "embedding sidecar");
    }
  }
  return in;
}

curate::PoolView load_pool(const PoolInputs& in, int workers, Provenance* prov) {
  if (prov != nullptr) {
    prov->add_input(in.metadata);
    for (const auto& [family, path] : in.embeddings) prov->add_input(path);
  }
  return curate::read_pool(in.metadata, in.embeddings, workers);
}

/// Safety stage: a view of the pool without records failing the thresholds.
/// Embedding rows are dropped in lockstep to preserve alignment.
curate::PoolView apply_safety(const curate::PoolView& pool, double image_threshold,
                              double text_threshold) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pool.row_count(); ++i) {
    if (curate::safety_pass(pool.records[i], image_threshold, text_threshold)) {
      keep.push_back(i);
    }
  }
  curate::PoolView out;
  out.pool_id = pool.pool_id;
  out.records.reserve(keep.size());
  for (std::size_t i : keep) out.records.push_back(pool.records[i]);
  for (const auto& [family, table] : pool.embeddings) {
    curate::EmbeddingTable t;
    t.family = table.family;
    t.rows.resize(static_cast<Eigen::Index>(keep.size()), table.dim());
    for (std::size_t r = 0; r < keep.size(); ++r) {
      t.rows.row(static_cast<Eigen::Index>(r)) =
          table.rows.row(static_cast<Eigen::Index>(keep[r]));
    }
    out.embeddings[family] = std::move(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strategy expressions for `curate filter`.
// ---------------------------------------------------------------------------

struct StrategyContext {
  const json* cfg;  // top-level resolved config (fallback for node params)
  int workers = 1;
  std::uint64_t seed = 0;
  curate::HeuristicEnglishDetector detector;
  Provenance* prov = nullptr;
};

json expand_preset(const std::string& name) {
  if (name == "no_filtering") return json{{"kind", "no_filtering"}};
  if (name == "english") return json{{"kind", "english"}};
  if (name == "caption_length") return json{{"kind", "caption_length"}};
  if (name == "image_size") return json{{"kind", "image_size"}};
  if (name == "safety") return json{{"kind", "safety"}};
  if (name == "basic") {
    return json{{"op", "intersect"},
                {"of", json::array({json{{"kind", "english"}},
                                    json{{"kind", "caption_length"}},
                                    json{{"kind", "image_size"}}})}};
  }
  if (name == "text_based") return json{{"kind", "synset_text"}};
  if (name == "image_based") return json{{"kind", "image_based"}};
  if (name == "clip_l14_top30") {
    return json{{"kind", "clip_top_fraction"}, {"family", "clip_l14"}, {"fraction", 0.30}};
  }
  if (name == "clip_b32_top30") {
    return json{{"kind", "clip_top_fraction"}, {"family", "clip_b32"}, {"fraction", 0.30}};
  }
  if (name == "image_based\xE2\x88\xA9" "clip_l14_top30" ||
      name == "image_based_x_clip_l14_top30") {
    return json{{"op", "intersect"},
                {"of", json::array({expand_preset("image_based"),
                                    expand_preset("clip_l14_top30")})}};
  }
  throw curate::ConfigError("unknown strategy preset '" + name + "'");
}

std::vector<std::string> strategy_preset_names() {
  return {"no_filtering",  "basic",          "english",
          "caption_length", "image_size",    "safety",
          "text_based",    "image_based",    "clip_l14_top30",
          "clip_b32_top30", "image_based\xE2\x88\xA9" "clip_l14_top30"};
}

/// Node parameter with fallback to the top-level config.
json node_param(const json& node, const StrategyContext& ctx, const char* key) {
  if (node.contains(key)) return node[key];
  if (ctx.cfg != nullptr && ctx.cfg->contains(key)) return (*ctx.cfg)[key];
  return json();
}

curate::SynsetLexicon load_lexicon_from(const json& node, const StrategyContext& ctx) {
  const json lexicon_path = node_param(node, ctx, "lexicon");
  if (lexicon_path.is_null()) {
    throw curate::ConfigError("synset strategy requires --lexicon / config key lexicon");
  }
  curate::SynsetLexicon lex;
  const fs::path words = lexicon_path.get<std::string>();
  require_file(words, "lexicon");
  curate::load_lexicon_words(lex, words);
  if (ctx.prov != nullptr) ctx.prov->add_input(words);

  const json sets = node_param(node, ctx, "membership_sets");
  if (!sets.is_null()) {
    for (const auto& [name, path] : sets.items()) {
      const fs::path p = path.get<std::string>();
      require_file(p, "membership set");
      curate::load_membership_set(lex, name, p);
      if (ctx.prov != nullptr) ctx.prov->add_input(p);
    }
  }
  return lex;
}

curate::EmbeddingTable load_references_from(const json& node, const StrategyContext& ctx) {
  const json refs = node_param(node, ctx, "references");
  if (refs.is_null()) {
    throw curate::ConfigError("strategy requires --references / config key references");
  }
  const fs::path path = refs.get<std::string>();
  require_file(path, "reference embeddings");
  if (ctx.prov != nullptr) ctx.prov->add_input(path);
  return curate::read_embedding_table(path, /*renormalize=*/true);
}

curate::ClusterModel cluster_model_for(const json& node, const StrategyContext& ctx,
                                       const curate::PoolView& pool,
                                       const std::string& family) {
  const json model_path = node_param(node, ctx, "cluster_model");
  if (!model_path.is_null()) {
    const fs::path path = model_path.get<std::string>();
    require_file(path, "cluster model");
    if (ctx.prov != nullptr) ctx.prov->add_input(path);
    return curate::read_cluster_model(path);
  }

  curate::KmeansOptions opts;
  opts.workers = ctx.workers;
  const json sample = node_param(node, ctx, "fit_sample_size");
  if (!sample.is_null()) opts.fit_sample_size = sample.get<std::size_t>();
  const json k = node_param(node, ctx, "k");
  const json iterations = node_param(node, ctx, "iterations");
  const json seed = node_param(node, ctx, "seed");
  curate::ClusterModel model = curate::kmeans_fit(
      pool.embedding(family), k.is_null() ? 256 : k.get<int>(),
      iterations.is_null() ? 20 : iterations.get<int>(),
      seed.is_null() ? ctx.seed : seed.get<std::uint64_t>(), opts);

  const json save = node_param(node, ctx, "save_cluster_model");
  if (!save.is_null()) {
    curate::write_cluster_model(model, fs::path(save.get<std::string>()));
  }
  return model;
}

curate::SubsetManifest eval_strategy(const json& raw_node, const curate::PoolView& pool,
                                     StrategyContext& ctx) {
  json node = raw_node;
  if (node.is_string()) node = expand_preset(node.get<std::string>());
  if (!node.is_object()) {
    throw curate::ConfigError("strategy node must be a preset name or an object");
  }

  if (node.contains("op")) {
    const std::string op = node["op"].get<std::string>();
    if (!node.contains("of") || !node["of"].is_array() || node["of"].empty()) {
      throw curate::ConfigError("strategy op '" + op + "' requires a nonempty 'of' array");
    }
    curate::SubsetManifest acc = eval_strategy(node["of"][0], pool, ctx);
    for (std::size_t i = 1; i < node["of"].size(); ++i) {
      const curate::SubsetManifest rhs = eval_strategy(node["of"][i], pool, ctx);
      acc = op == "intersect"   ? curate::intersect(acc, rhs)
            : op == "union"     ? curate::unite(acc, rhs)
                                : throw curate::ConfigError("unknown strategy op '" + op + "'");
    }
    return acc;
  }

  if (!node.contains("kind")) {
    throw curate::ConfigError("strategy node needs a 'kind' or an 'op'");
  }
  const std::string kind = node["kind"].get<std::string>();

  if (kind == "no_filtering") {
    std::vector<curate::Uid> all;
    for (const auto& r : pool.records) all.push_back(r.uid);
    return curate::SubsetManifest(std::move(all), pool.pool_id, "no_filtering");
  }
  if (kind == "english") {
    return curate::predicate_filter(
        pool, [&](const curate::SampleRecord& r) { return english_pass(r, ctx.detector); },
        "english(" + ctx.detector.name() + ")");
  }
  if (kind == "caption_length") {
    const int min_words = node.value("min_words", 2);
    const int min_chars = node.value("min_chars", 6);
    return curate::predicate_filter(
        pool,
        [&](const curate::SampleRecord& r) {
          return caption_length_pass(r, min_words, min_chars);
        },
        "caption_length");
  }
  if (kind == "image_size") {
    const int min_dim = node.value("min_dim", 200);
    const double max_aspect = node.value("max_aspect", 3.0);
    return curate::predicate_filter(
        pool,
        [&](const curate::SampleRecord& r) { return image_size_pass(r, min_dim, max_aspect); },
        "image_size");
  }
  if (kind == "safety") {
    const double img = node.value("image_threshold", 0.1);
    const double txt = node.value("text_threshold", 0.1);
    return curate::predicate_filter(
        pool, [&](const curate::SampleRecord& r) { return safety_pass(r, img, txt); },
        "safety");
  }
  if (kind == "clip_threshold") {
    if (node.contains("model")) {
      const auto& preset = curate::find_clip_preset(
          node["model"].get<std::string>(), node.at("fraction_label").get<std::string>());
      const std::string family = preset.model == "ViT-B/32" ? "clip_b32" : "clip_l14";
      return curate::clip_threshold_filter(pool, family, preset.threshold);
    }
    return curate::clip_threshold_filter(pool, node.at("family").get<std::string>(),
                                         node.at("threshold").get<double>());
  }
  if (kind == "clip_top_fraction") {
    return curate::clip_top_fraction_filter(pool, node.at("family").get<std::string>(),
                                            node.at("fraction").get<double>());
  }
  if (kind == "clip_fraction_range") {
    return curate::clip_fraction_range_filter(pool, node.at("family").get<std::string>(),
                                              node.at("lo").get<double>(),
                                              node.at("hi").get<double>());
  }
  if (kind == "synset_text") {
    const curate::SynsetLexicon lex = load_lexicon_from(node, ctx);
    const json set_name = node_param(node, ctx, "set_name");
    if (set_name.is_null()) {
      throw curate::ConfigError("synset_text requires --set-name / config key set_name");
    }
    return curate::synset_text_filter(pool, lex, set_name.get<std::string>(), ctx.detector);
  }
  if (kind == "image_based") {
    const json family_json = node_param(node, ctx, "family");
    const std::string family =
        family_json.is_null() ? "clip_l14_image" : family_json.get<std::string>();
    const curate::ClusterModel model = cluster_model_for(node, ctx, pool, family);
    const curate::EmbeddingTable refs = load_references_from(node, ctx);
    const std::set<int> covered = curate::build_cluster_set(model, refs, ctx.workers);
    return curate::image_based_filter(pool, family, model, covered, ctx.detector,
                                      ctx.workers);
  }
  if (kind == "imagenet_distance") {
    const json family_json = node_param(node, ctx, "family");
    const std::string family =
        family_json.is_null() ? "clip_l14_image" : family_json.get<std::string>();
    const curate::EmbeddingTable refs = load_references_from(node, ctx);
    return curate::min_distance_rank_filter(pool, family, refs,
                                            node.at("fraction").get<double>(), ctx.workers);
  }
  throw curate::ConfigError("unknown strategy kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Shared flag block.
// ---------------------------------------------------------------------------

struct CommonFlags {
  std::string config_path;
  std::string pool_meta;
  std::vector<std::string> embeddings;
  int workers = 1;
  std::uint64_t seed = 0;
  bool safety = false;
  double safety_image_threshold = 0.1;
  double safety_text_threshold = 0.1;

  CLI::Option* pool_meta_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* safety_opt = nullptr;

  void attach(CLI::App* cmd, bool with_pool = true) {
    cmd->add_option("--config", config_path, "JSON config file (flags override)");
    if (with_pool) {
      pool_meta_opt = cmd->add_option("--pool-meta", pool_meta, "pool metadata JSONL");
      cmd->add_option("--embeddings", embeddings,
                      "embedding sidecars as family=path (repeatable)");
    }
    workers_opt = cmd->add_option("--workers", workers, "worker thread count");
    seed_opt = cmd->add_option("--seed", seed, "seed for all stochastic stages");
    safety_opt = cmd->add_flag("--safety", safety, "apply NSFW safety thresholds first");
    cmd->add_option("--safety-image-threshold", safety_image_threshold, "default 0.1");
    cmd->add_option("--safety-text-threshold", safety_text_threshold, "default 0.1");
  }

  json resolve() const {
    json cfg = config_path.empty() ? json::object() : load_config_file(config_path);
    if (pool_meta_opt != nullptr && pool_meta_opt->count() > 0) cfg["pool_meta"] = pool_meta;
    if (!embeddings.empty()) {
      json emb = cfg.value("embeddings", json::object());
      for (const auto& [family, path] : parse_family_paths(embeddings, "--embeddings")) {
        emb[family] = path.string();
      }
      cfg["embeddings"] = emb;
    }
    if (workers_opt->count() > 0) cfg["workers"] = workers;
    if (seed_opt->count() > 0) cfg["seed"] = seed;
    if (safety_opt->count() > 0) {
      cfg["safety"] = json{{"image_threshold", safety_image_threshold},
                           {"text_threshold", safety_text_threshold}};
    }
    return cfg;
  }
};

curate::PoolView load_and_gate(const json& cfg, Provenance* prov) {
  const int workers = cfg.value("workers", 1);
  curate::PoolView pool = load_pool(pool_inputs_from(cfg), workers, prov);
  if (cfg.contains("safety")) {
    pool = apply_safety(pool, cfg["safety"].value("image_threshold", 0.1),
                        cfg["safety"].value("text_threshold", 0.1));
  }
  return pool;
}

void emit_manifest(const curate::SubsetManifest& manifest, const fs::path& out,
                   OutputTracker& tracker, Provenance& prov) {
  tracker.track(out);
  curate::write_manifest(manifest, out);
  prov.outputs.push_back(out.string());
  prov.write(out.parent_path().empty() ? fs::path(".") : out.parent_path());
  std::cout << "wrote " << manifest.size() << " uids to " << out.string() << "\n";
}

// ---------------------------------------------------------------------------
// Subcommand runners.
// ---------------------------------------------------------------------------

int run_filter(const json& cfg, const std::string& out_path) {
  if (out_path.empty()) throw curate::ConfigError("filter requires --out");
  if (!cfg.contains("strategy")) {
    throw curate::ConfigError("filter requires --strategy or config key strategy");
  }

  OutputTracker tracker;
  try {
    Provenance prov;
    prov.subcommand = "filter";
    prov.config = cfg;
    prov.config["out"] = out_path;

    const curate::PoolView pool = load_and_gate(cfg, &prov);
    StrategyContext ctx;
    ctx.cfg = &cfg;
    ctx.workers = cfg.value("workers", 1);
    ctx.seed = cfg.value("seed", std::uint64_t{0});
    ctx.prov = &prov;
    prov.detector = ctx.detector.name();

    const curate::SubsetManifest manifest = eval_strategy(cfg["strategy"], pool, ctx);
    emit_manifest(manifest, out_path, tracker, prov);
    return 0;
  } catch (...) {
    tracker.cleanup();
    throw;
  }
}

int run_sample(const json& cfg, const std::string& out_path) {
  if (out_path.empty()) throw curate::ConfigError("sample requires --out");
  const std::string mode = cfg.value("mode", "");
  if (mode != "text" && mode != "image") {
    throw curate::ConfigError("sample requires --mode text|image");
  }

  OutputTracker tracker;
  try {
    Provenance prov;
    prov.subcommand = "sample";
    prov.config = cfg;
    prov.config["out"] = out_path;

    const curate::PoolView pool = load_and_gate(cfg, &prov);
    StrategyContext ctx;
    ctx.cfg = &cfg;
    ctx.workers = cfg.value("workers", 1);
    ctx.seed = cfg.value("seed", std::uint64_t{0});
    ctx.prov = &prov;
    prov.detector = ctx.detector.name();

    curate::SamplingParams params;
    params.alpha = cfg.value("alpha", 1.0);
    params.mode = cfg.value("weight_mode", "average") == "max"
                      ? curate::SynsetWeightMode::max
                      : curate::SynsetWeightMode::average;
    if (!cfg.contains("target_size")) {
      throw curate::ConfigError("sample requires --target-size");
    }
    params.target_size = cfg["target_size"].get<std::size_t>();
    params.seed = ctx.seed;
    params.repeat_cap = cfg.value("repeat_cap", std::size_t{100});

    curate::SubsetManifest manifest;
    if (mode == "text") {
      const curate::SynsetLexicon lex = load_lexicon_from(json::object(), ctx);
      const curate::SynsetIndex index = curate::build_synset_index(pool, lex);
      manifest = curate::text_sample(pool, index, params);
    } else {
      const json family_json = cfg.contains("family") ? cfg["family"] : json();
      const std::string family =
          family_json.is_null() ? "clip_l14_image" : family_json.get<std::string>();
      const curate::ClusterModel model =
          cluster_model_for(json::object(), ctx, pool, family);
      std::vector<std::int64_t> counts;
      if (cfg.contains("cluster_counts")) {
        const fs::path counts_path = cfg["cluster_counts"].get<std::string>();
        require_file(counts_path, "cluster counts");
        prov.add_input(counts_path);
        counts = curate::read_cluster_counts(counts_path,
                                             static_cast<std::size_t>(model.k()));
      } else {
        const curate::EmbeddingTable refs = load_references_from(json::object(), ctx);
        counts = curate::compute_cluster_counts(model, refs, ctx.workers);
      }
      manifest = curate::image_sample(pool, family, model, counts, params, ctx.workers);
    }
    emit_manifest(manifest, out_path, tracker, prov);
    return 0;
  } catch (...) {
    tracker.cleanup();
    throw;
  }
}

int run_dedup(const json& cfg, const std::string& out_path) {
  if (out_path.empty()) throw curate::ConfigError("dedup requires --out");
  const std::string mode = cfg.value("mode", "self");

  OutputTracker tracker;
  try {
    Provenance prov;
    prov.subcommand = "dedup";
    prov.config = cfg;
    prov.config["out"] = out_path;

    const curate::PoolView pool = load_and_gate(cfg, &prov);
    const int workers = cfg.value("workers", 1);

    if (mode == "eval") {
      const std::string family = cfg.value("family", "dedup_descriptor");
      if (!cfg.contains("eval_embeddings")) {
        throw curate::ConfigError("dedup --mode eval requires --eval-embeddings");
      }
      const fs::path eval_path = cfg["eval_embeddings"].get<std::string>();
      require_file(eval_path, "eval embeddings");
      prov.add_input(eval_path);
      const curate::EmbeddingTable eval_table =
          curate::read_embedding_table(eval_path, true);
      const double threshold = cfg.value("eval_threshold", 0.604169);
      const auto flags = curate::flag_eval_duplicates(pool.embedding(family), eval_table,
                                                      threshold, workers);
      tracker.track(out_path);
      curate::write_flag_list(pool, flags, out_path);
      prov.outputs.push_back(out_path);
      prov.write(fs::path(out_path).parent_path().empty()
                     ? fs::path(".")
                     : fs::path(out_path).parent_path());
      std::size_t flagged = 0;
      for (bool f : flags) flagged += f ? 1 : 0;
      std::cout << "flagged " << flagged << "/" << flags.size() << " records\n";
      return 0;
    }

    if (mode != "self") throw curate::ConfigError("dedup mode must be self or eval");
    const std::string family = cfg.value("family", "clip_l14_image");
    curate::DedupParams params;
    params.t_adc = cfg.value("t_adc", 0.1);
    params.knn = cfg.value("knn", std::size_t{1000});
    const int m = cfg.value("m", 4);
    const int bits = cfg.value("bits", 8);
    const auto seed = cfg.value("seed", std::uint64_t{0});
    const curate::Quantizer q =
        curate::train_quantizer(pool.embedding(family), m, bits, seed);
    const curate::SubsetManifest manifest =
        curate::self_dedup(pool, family, params, q, workers);
    emit_manifest(manifest, out_path, tracker, prov);
    return 0;
  } catch (...) {
    tracker.cleanup();
    throw;
  }
}

int run_reshard(const json& cfg) {
  if (!cfg.contains("input_dir") || !cfg.contains("manifest") || !cfg.contains("out_dir")) {
    throw curate::ConfigError("reshard requires --input-dir, --manifest and --out-dir");
  }
  const fs::path input_dir = cfg["input_dir"].get<std::string>();
  const fs::path manifest_path = cfg["manifest"].get<std::string>();
  const fs::path out_dir = cfg["out_dir"].get<std::string>();
  require_file(manifest_path, "manifest");
  const std::size_t samples_per_shard = cfg.value("samples_per_shard", std::size_t{1000});
  const int workers = cfg.value("workers", 1);

  Provenance prov;
  prov.subcommand = "reshard";
  prov.config = cfg;
  prov.add_input(manifest_path);

  const curate::SubsetManifest manifest = curate::read_manifest(manifest_path);
  const bool existed = fs::exists(out_dir);

  OutputTracker tracker;
  if (!existed) tracker.track(out_dir);
  try {
    auto progress = [](std::size_t n, std::size_t total) {
      std::cout << "shard " << n << "/" << total << " scanned\n";
    };
    const curate::ReshardReport report = curate::reshard_parallel(
        input_dir, manifest, out_dir, samples_per_shard, workers, progress);

    const fs::path report_path = out_dir / "reshard-report.json";
    std::ofstream report_out(report_path, std::ios::binary | std::ios::trunc);
    report_out << report.to_json().dump(2) << '\n';
    prov.outputs.push_back(report_path.string());
    prov.write(out_dir);

    if (cfg.value("verify", false)) {
      curate::VerifyDiff diff;
      if (!curate::verify_shards(out_dir, manifest, report.missing_uids, &diff)) {
        for (const auto& p : diff.problems) std::cerr << "verify: " << p << "\n";
        throw curate::DataError("reshard verification failed with " +
                                std::to_string(diff.problems.size()) + " problems");
      }
      std::cout << "verify: ok\n";
    }
    std::cout << "resharded " << report.samples_written << " samples ("
              << report.missing_uids.size() << " missing uids)\n";
    return 0;
  } catch (...) {
    tracker.cleanup();
    throw;
  }
}

int run_stats(const json& cfg, const std::string& out_path) {
  if (out_path.empty()) throw curate::ConfigError("stats requires --out");
  OutputTracker tracker;
  try {
    Provenance prov;
    prov.subcommand = "stats";
    prov.config = cfg;
    prov.config["out"] = out_path;
    const curate::PoolView pool = load_and_gate(cfg, &prov);
    const curate::PoolStats stats = curate::compute_pool_stats(pool);
    tracker.track(out_path);
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw curate::IoError("cannot write stats: " + out_path);
    out << stats.to_json().dump(2) << '\n';
    prov.outputs.push_back(out_path);
    prov.write(fs::path(out_path).parent_path().empty()
                   ? fs::path(".")
                   : fs::path(out_path).parent_path());
    std::cout << "wrote stats for " << stats.row_count << " records\n";
    return 0;
  } catch (...) {
    tracker.cleanup();
    throw;
  }
}

int run_metrics(const json& cfg, const std::string& out_path) {
  if (!cfg.contains("registry")) throw curate::ConfigError("metrics requires --registry");
  const fs::path registry_path = cfg["registry"].get<std::string>();
  require_file(registry_path, "task registry");
  const auto registry = curate::load_task_registry(registry_path);

  std::map<std::string, fs::path> prediction_files;
  if (cfg.contains("predictions")) {
    for (const auto& [task, path] : cfg["predictions"].items()) {
      prediction_files[task] = fs::path(path.get<std::string>());
    }
  }
  if (cfg.contains("predictions_dir")) {
    const fs::path dir = cfg["predictions_dir"].get<std::string>();
    require_file(dir, "predictions directory");
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
      std::string task = entry.path().stem().string();
      std::replace(task.begin(), task.end(), '_', ' ');
      prediction_files[task] = entry.path();
    }
  }
  if (prediction_files.empty()) {
    throw curate::ConfigError("metrics requires --predictions task=path or --predictions-dir");
  }

  std::vector<curate::TaskValue> values;
  std::vector<std::string> clean_exclusions;
  for (const auto& entry : registry) {
    if (!entry.clean) clean_exclusions.push_back(entry.task);
    const auto it = prediction_files.find(entry.task);
    if (it == prediction_files.end()) continue;
    require_file(it->second, "prediction file");
    const curate::PredictionSet preds = curate::read_predictions(it->second, entry.task);
    values.push_back({entry.task, entry.metric, curate::apply_metric(entry, preds)});
  }
  for (const auto& [task, path] : prediction_files) {
    const bool known = std::any_of(registry.begin(), registry.end(),
                                   [&](const auto& e) { return e.task == task; });
    if (!known) {
      throw curate::ConfigError("prediction file for unknown task '" + task + "'");
    }
  }

  const curate::MetricReport report = curate::aggregate_report(values, clean_exclusions);

  std::printf("%-24s %-22s %8s\n", "task", "metric", "value");
  for (const auto& t : report.per_task) {
    std::printf("%-24s %-22s %8.4f\n", t.task.c_str(), t.metric.c_str(), t.value);
  }
  std::printf("%-24s %-22s %8.4f\n", "average", "", report.average);
  if (report.clean_average) {
    std::printf("%-24s %-22s %8.4f\n", "clean average", "", *report.clean_average);
  }

  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw curate::IoError("cannot write report: " + out_path);
    out << report.to_json().dump(2) << '\n';
  }
  return 0;
}

int run_presets(bool as_json, const std::string& write_path) {
  if (!write_path.empty()) {
    curate::write_presets_json(write_path);
    std::cout << "wrote " << write_path << "\n";
    return 0;
  }
  if (as_json) {
    ordered_json j;
    ordered_json rows = ordered_json::array();
    for (const auto& p : curate::clip_threshold_presets()) {
      rows.push_back(ordered_json{{"model", p.model},
                                  {"english_filtering", p.english_filtering},
                                  {"threshold", p.threshold},
                                  {"fraction_label", p.fraction_label},
                                  {"fraction", p.fraction}});
    }
    j["clip_threshold_presets"] = std::move(rows);
    j["strategies"] = strategy_preset_names();
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("%-10s %-12s %-10s %s\n", "model", "en.filter", "threshold", "fraction");
  for (const auto& p : curate::clip_threshold_presets()) {
    std::printf("%-10s %-12s %-10g %s\n", p.model.c_str(),
                p.english_filtering ? "yes" : "no", p.threshold, p.fraction_label.c_str());
  }
  std::printf("\nnamed strategies:\n");
  for (const auto& name : strategy_preset_names()) std::printf("  %s\n", name.c_str());
  return 0;
}

void print_error_json(const std::string& type, const std::string& message) {
  ordered_json j;
  j["error"] = ordered_json{{"type", type}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curate: image-text pool curation toolkit"};
  app.require_subcommand(1);

  // filter ------------------------------------------------------------------
  auto* filter = app.add_subcommand("filter", "select a subset by a filtering strategy");
  CommonFlags filter_flags;
  filter_flags.attach(filter);
  std::string filter_strategy, filter_out, filter_lexicon, filter_set_name;
  std::string filter_references, filter_cluster_model, filter_save_model;
  std::vector<std::string> filter_sets;
  auto* strategy_opt =
      filter->add_option("--strategy", filter_strategy, "preset name or JSON expression");
  filter->add_option("--out", filter_out, "output manifest path");
  auto* lex_opt = filter->add_option("--lexicon", filter_lexicon, "word<TAB>offset file");
  auto* sets_opt = filter->add_option("--membership", filter_sets,
                                      "membership set as name=path (repeatable)");
  auto* set_name_opt = filter->add_option("--set-name", filter_set_name,
                                          "membership set for text_based");
  auto* refs_opt = filter->add_option("--references", filter_references,
                                      "reference embedding sidecar");
  auto* model_opt = filter->add_option("--cluster-model", filter_cluster_model,
                                       "load a cluster model instead of fitting");
  auto* save_model_opt = filter->add_option("--save-cluster-model", filter_save_model,
                                            "write the fitted cluster model here");
  int filter_k = 256, filter_iterations = 20;
  std::size_t filter_fit_sample = 0;
  auto* k_opt = filter->add_option("--k", filter_k, "cluster count (default 256)");
  auto* iter_opt = filter->add_option("--iterations", filter_iterations, "default 20");
  auto* fit_sample_opt =
      filter->add_option("--fit-sample-size", filter_fit_sample, "0 = fit on all rows");

  // sample ------------------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "temperature-weighted sampling");
  CommonFlags sample_flags;
  sample_flags.attach(sample);
  std::string sample_mode, sample_out, sample_lexicon, sample_weight_mode;
  std::string sample_references, sample_counts, sample_model, sample_family;
  double sample_alpha = 1.0;
  std::size_t sample_target = 0, sample_cap = 100;
  auto* mode_opt = sample->add_option("--mode", sample_mode, "text or image");
  sample->add_option("--out", sample_out, "output manifest path");
  auto* alpha_opt = sample->add_option("--alpha", sample_alpha, "temperature, >= 0");
  auto* wm_opt = sample->add_option("--weight-mode", sample_weight_mode, "average|max");
  auto* target_opt = sample->add_option("--target-size", sample_target, "samples to draw");
  auto* cap_opt = sample->add_option("--repeat-cap", sample_cap, "default 100");
  auto* s_lex_opt = sample->add_option("--lexicon", sample_lexicon, "for --mode text");
  auto* s_refs_opt = sample->add_option("--references", sample_references,
                                        "reference sidecar for cluster scores");
  auto* s_counts_opt = sample->add_option("--cluster-counts", sample_counts,
                                          "cluster_index<TAB>count file");
  auto* s_model_opt = sample->add_option("--cluster-model", sample_model,
                                         "load a cluster model instead of fitting");
  auto* s_family_opt = sample->add_option("--family", sample_family,
                                          "embedding family (default clip_l14_image)");
  int sample_k = 256, sample_iterations = 20;
  std::size_t sample_fit_sample = 0;
  auto* s_k_opt = sample->add_option("--k", sample_k, "cluster count (default 256)");
  auto* s_iter_opt = sample->add_option("--iterations", sample_iterations, "default 20");
  auto* s_fit_opt =
      sample->add_option("--fit-sample-size", sample_fit_sample, "0 = fit on all rows");

  // dedup -------------------------------------------------------------------
  auto* dedup = app.add_subcommand("dedup", "near-duplicate removal / flagging");
  CommonFlags dedup_flags;
  dedup_flags.attach(dedup);
  std::string dedup_mode = "self", dedup_out, dedup_family, dedup_eval;
  double dedup_tadc = 0.1, dedup_eval_threshold = 0.604169;
  std::size_t dedup_knn = 1000;
  int dedup_m = 4, dedup_bits = 8;
  auto* dmode_opt = dedup->add_option("--mode", dedup_mode, "self (default) or eval");
  dedup->add_option("--out", dedup_out, "manifest (self) or flag list (eval)");
  auto* dfam_opt = dedup->add_option("--family", dedup_family, "embedding family");
  auto* tadc_opt = dedup->add_option("--t-adc", dedup_tadc, "criterion threshold");
  auto* knn_opt = dedup->add_option("--knn", dedup_knn, "neighbors searched, default 1000");
  auto* m_opt = dedup->add_option("--m", dedup_m, "quantizer subspaces, default 4");
  auto* bits_opt = dedup->add_option("--bits", dedup_bits, "bits per code, default 8");
  auto* deval_opt = dedup->add_option("--eval-embeddings", dedup_eval,
                                      "eval descriptor sidecar for --mode eval");
  auto* dthr_opt = dedup->add_option("--eval-threshold", dedup_eval_threshold,
                                     "cosine threshold, default 0.604169");

  // reshard -----------------------------------------------------------------
  auto* reshard_cmd = app.add_subcommand("reshard", "materialize a manifest from shards");
  CommonFlags reshard_flags;
  std::string reshard_input, reshard_manifest, reshard_out;
  std::size_t reshard_sps = 1000;
  bool reshard_verify = false;
  reshard_flags.attach(reshard_cmd, /*with_pool=*/false);
  auto* rin_opt = reshard_cmd->add_option("--input-dir", reshard_input, "input ShardSet");
  auto* rman_opt = reshard_cmd->add_option("--manifest", reshard_manifest, "manifest file");
  auto* rout_opt = reshard_cmd->add_option("--out-dir", reshard_out, "empty output dir");
  auto* rsps_opt = reshard_cmd->add_option("--samples-per-shard", reshard_sps,
                                           "default 1000");
  auto* rverify_opt = reshard_cmd->add_flag("--verify", reshard_verify,
                                            "verify output against the manifest");

  // stats -------------------------------------------------------------------
  auto* stats = app.add_subcommand("stats", "pool statistics report");
  CommonFlags stats_flags;
  stats_flags.attach(stats);
  std::string stats_out;
  stats->add_option("--out", stats_out, "output JSON path");

  // metrics -----------------------------------------------------------------
  auto* metrics = app.add_subcommand("metrics", "evaluation metrics from predictions");
  std::string metrics_config, metrics_registry, metrics_dir, metrics_out;
  std::vector<std::string> metrics_preds;
  metrics->add_option("--config", metrics_config, "JSON config file");
  auto* mreg_opt = metrics->add_option("--registry", metrics_registry, "task registry JSON");
  auto* mpred_opt = metrics->add_option("--predictions", metrics_preds,
                                        "prediction file as task=path (repeatable)");
  auto* mdir_opt = metrics->add_option("--predictions-dir", metrics_dir,
                                       "directory of <task>.jsonl files");
  metrics->add_option("--out", metrics_out, "report JSON path");

  // presets -----------------------------------------------------------------
  auto* presets = app.add_subcommand("presets", "list threshold and strategy presets");
  bool presets_json = false;
  std::string presets_write;
  presets->add_flag("--json", presets_json, "machine-readable output");
  presets->add_option("--write", presets_write, "write the preset table to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    print_error_json("validation", e.what());
    return 2;
  }

  try {
    if (filter->parsed()) {
      json cfg = filter_flags.resolve();
      if (strategy_opt->count() > 0) {
        if (!filter_strategy.empty() && filter_strategy.front() == '{') {
          cfg["strategy"] = json::parse(filter_strategy);
        } else {
          cfg["strategy"] = filter_strategy;
        }
      }
      if (lex_opt->count() > 0) cfg["lexicon"] = filter_lexicon;
      if (sets_opt->count() > 0) {
        json sets = cfg.value("membership_sets", json::object());
        for (const auto& [name, path] : parse_family_paths(filter_sets, "--membership")) {
          sets[name] = path.string();
        }
        cfg["membership_sets"] = sets;
      }
      if (set_name_opt->count() > 0) cfg["set_name"] = filter_set_name;
      if (refs_opt->count() > 0) cfg["references"] = filter_references;
      if (model_opt->count() > 0) cfg["cluster_model"] = filter_cluster_model;
      if (save_model_opt->count() > 0) cfg["save_cluster_model"] = filter_save_model;
      if (k_opt->count() > 0) cfg["k"] = filter_k;
      if (iter_opt->count() > 0) cfg["iterations"] = filter_iterations;
      if (fit_sample_opt->count() > 0) cfg["fit_sample_size"] = filter_fit_sample;
      const std::string out = filter_out.empty() ? cfg.value("out", "") : filter_out;
      return run_filter(cfg, out);
    }
    if (sample->parsed()) {
      json cfg = sample_flags.resolve();
      if (mode_opt->count() > 0) cfg["mode"] = sample_mode;
      if (alpha_opt->count() > 0) cfg["alpha"] = sample_alpha;
      if (wm_opt->count() > 0) cfg["weight_mode"] = sample_weight_mode;
      if (target_opt->count() > 0) cfg["target_size"] = sample_target;
      if (cap_opt->count() > 0) cfg["repeat_cap"] = sample_cap;
      if (s_lex_opt->count() > 0) cfg["lexicon"] = sample_lexicon;
      if (s_refs_opt->count() > 0) cfg["references"] = sample_references;
      if (s_counts_opt->count() > 0) cfg["cluster_counts"] = sample_counts;
      if (s_model_opt->count() > 0) cfg["cluster_model"] = sample_model;
      if (s_family_opt->count() > 0) cfg["family"] = sample_family;
      if (s_k_opt->count() > 0) cfg["k"] = sample_k;
      if (s_iter_opt->count() > 0) cfg["iterations"] = sample_iterations;
      if (s_fit_opt->count() > 0) cfg["fit_sample_size"] = sample_fit_sample;
      const std::string out = sample_out.empty() ? cfg.value("out", "") : sample_out;
      return run_sample(cfg, out);
    }
    if (dedup->parsed()) {
      json cfg = dedup_flags.resolve();
      if (dmode_opt->count() > 0) cfg["mode"] = dedup_mode;
      if (dfam_opt->count() > 0) cfg["family"] = dedup_family;
      if (tadc_opt->count() > 0) cfg["t_adc"] = dedup_tadc;
      if (knn_opt->count() > 0) cfg["knn"] = dedup_knn;
      if (m_opt->count() > 0) cfg["m"] = dedup_m;
      if (bits_opt->count() > 0) cfg["bits"] = dedup_bits;
      if (deval_opt->count() > 0) cfg["eval_embeddings"] = dedup_eval;
      if (dthr_opt->count() > 0) cfg["eval_threshold"] = dedup_eval_threshold;
      const std::string out = dedup_out.empty() ? cfg.value("out", "") : dedup_out;
      return run_dedup(cfg, out);
    }
    if (reshard_cmd->parsed()) {
      json cfg = reshard_flags.resolve();
      if (rin_opt->count() > 0) cfg["input_dir"] = reshard_input;
      if (rman_opt->count() > 0) cfg["manifest"] = reshard_manifest;
      if (rout_opt->count() > 0) cfg["out_dir"] = reshard_out;
      if (rsps_opt->count() > 0) cfg["samples_per_shard"] = reshard_sps;
      if (rverify_opt->count() > 0) cfg["verify"] = reshard_verify;
      return run_reshard(cfg);
    }
    if (stats->parsed()) {
      json cfg = stats_flags.resolve();
      const std::string out = stats_out.empty() ? cfg.value("out", "") : stats_out;
      return run_stats(cfg, out);
    }
    if (metrics->parsed()) {
      json cfg = metrics_config.empty() ? json::object() : load_config_file(metrics_config);
      if (mreg_opt->count() > 0) cfg["registry"] = metrics_registry;
      if (mpred_opt->count() > 0) {
        json preds = cfg.value("predictions", json::object());
        for (const auto& [task, path] : parse_family_paths(metrics_preds, "--predictions")) {
          preds[task] = path.string();
        }
        cfg["predictions"] = preds;
      }
      if (mdir_opt->count() > 0) cfg["predictions_dir"] = metrics_dir;
      const std::string out = metrics_out.empty() ? cfg.value("out", "") : metrics_out;
      return run_metrics(cfg, out);
    }
    if (presets->parsed()) {
      return run_presets(presets_json, presets_write);
    }
    return 2;
  } catch (const curate::ConfigError& e) {
    print_error_json("config", e.what());
    return 2;
  } catch (const curate::ValidationError& e) {
    print_error_json("validation", e.what());
    return 2;
  } catch (const curate::FormatError& e) {
    print_error_json("format", e.what());
    return 3;
  } catch (const curate::DataError& e) {
    print_error_json("data", e.what());
    return 3;
  } catch (const curate::IoError& e) {
    print_error_json("io", e.what());
    return 4;
  } catch (const json::exception& e) {
    print_error_json("config", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error_json("internal", e.what());
    return 1;
  }
}
