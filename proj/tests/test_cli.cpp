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
#include <cstdlib>
#include <random>
#include <sstream>

#include "curate/manifest.hpp"
#include "curate/pool_io.hpp"
#include "curate/reshard.hpp"
#include "curate/tar.hpp"

#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"

using namespace curate;
using namespace curate::test;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
  const char* bin = std::getenv("CURATE_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "CURATE_BIN must point at the curate binary");
  return bin;
}

int run_cli(const std::string& args) {
  const std::string cmd = cli_binary() + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

/// Synthetic pool on disk: n records, embeddings for clip_l14_image.
struct CliFixture {
  TempDir tmp{"cli"};
  fs::path meta;
  fs::path sidecar;
  PoolView pool;

  explicit CliFixture(std::size_t n, std::uint64_t seed = 1) {
    pool.pool_id = "meta";
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      SampleRecord r = fixture_record(i, unit(gen) * 2 - 1, unit(gen) * 2 - 1);
      pool.records.push_back(std::move(r));
    }
    EmbeddingTable table;
    table.family = "clip_l14_image";
    table.rows = random_unit_rows(n, 8, seed + 1);
    pool.embeddings["clip_l14_image"] = std::move(table);

    meta = tmp.path() / "meta.jsonl";
    write_pool(pool, meta, tmp.path() / "emb");
    sidecar = tmp.path() / "emb/clip_l14_image.dcem";
  }

  std::string pool_args() const {
    return "--pool-meta " + meta.string() + " --embeddings clip_l14_image=" +
           sidecar.string();
  }
};

}  // namespace

TEST_CASE("no_filtering preset keeps the whole pool") {
  CliFixture fx(10);
  const auto out = fx.tmp.path() / "all.dcmf";
  REQUIRE(run_cli("filter " + fx.pool_args() + " --strategy no_filtering --out " +
                  out.string()) == 0);
  const SubsetManifest m = read_manifest(out);
  CHECK(m.size() == 10);
  CHECK(fs::exists(fx.tmp.path() / "run.json"));
}

TEST_CASE("clip_l14_top30 on 1000 records keeps exactly 300") {
  CliFixture fx(1000);
  const auto out = fx.tmp.path() / "top30.dcmf";
  REQUIRE(run_cli("filter " + fx.pool_args() + " --strategy clip_l14_top30 --out " +
                  out.string()) == 0);
  CHECK(read_manifest(out).size() == 300);
}

TEST_CASE("composite preset equals the intersection of its parts") {
  CliFixture fx(400);
  // References: a few pool rows, so image_based keeps their clusters.
  EmbeddingTable refs;
  refs.family = "refs";
  refs.rows = fx.pool.embeddings.at("clip_l14_image").rows.topRows(20);
  const auto refs_path = fx.tmp.path() / "refs.dcem";
  write_embedding_table(refs, refs_path);

  const std::string cluster_args =
      " --references " + refs_path.string() + " --k 8 --iterations 5 --seed 7";

  const auto both = fx.tmp.path() / "both.dcmf";
  const auto image_only = fx.tmp.path() / "image.dcmf";
  const auto clip_only = fx.tmp.path() / "clip.dcmf";
  REQUIRE(run_cli("filter " + fx.pool_args() + cluster_args +
                  " --strategy image_based_x_clip_l14_top30 --out " + both.string()) == 0);
  REQUIRE(run_cli("filter " + fx.pool_args() + cluster_args +
                  " --strategy image_based --out " + image_only.string()) == 0);
  REQUIRE(run_cli("filter " + fx.pool_args() +
                  " --strategy clip_l14_top30 --out " + clip_only.string()) == 0);

  const SubsetManifest composed = read_manifest(both);
  SubsetManifest a = read_manifest(image_only);
  SubsetManifest b = read_manifest(clip_only);
  const SubsetManifest manual =
      intersect(SubsetManifest(a.uids(), "p", "a"), SubsetManifest(b.uids(), "p", "b"));
  CHECK(composed.uids() == manual.uids());
}

TEST_CASE("identical config and seed reproduce byte-identical manifests") {
  CliFixture fx(300);
  const auto out1 = fx.tmp.path() / "a.dcmf";
  const auto out2 = fx.tmp.path() / "b.dcmf";
  const std::string strategy =
      R"('{"kind":"clip_fraction_range","family":"clip_b32","lo":0.1,"hi":0.6}')";
  REQUIRE(run_cli("filter " + fx.pool_args() + " --strategy " + strategy + " --out " +
                  out1.string()) == 0);
  REQUIRE(run_cli("filter " + fx.pool_args() + " --strategy " + strategy + " --out " +
                  out2.string()) == 0);
  CHECK(read_file_bytes(out1) == read_file_bytes(out2));
}

TEST_CASE("run.json replays to identical output") {
  CliFixture fx(200);
  const auto out1 = fx.tmp.path() / "first.dcmf";
  REQUIRE(run_cli("filter " + fx.pool_args() +
                  " --strategy clip_b32_top30 --safety --out " + out1.string()) == 0);
  const auto run_json = fx.tmp.path() / "run.json";
  REQUIRE(fs::exists(run_json));

  // Replay from provenance alone; only the output path changes.
  const auto out2 = fx.tmp.path() / "replay.dcmf";
  REQUIRE(run_cli("filter --config " + run_json.string() + " --out " + out2.string()) == 0);
  CHECK(read_file_bytes(out1) == read_file_bytes(out2));

  // Provenance records inputs with digests and the detector identity.
  json prov;
  std::ifstream(run_json) >> prov;
  CHECK(prov["subcommand"] == "filter");
  CHECK(prov["inputs"].size() >= 1);
  CHECK(prov["detector"] == "heuristic-latin-stopword-v1");
}

TEST_CASE("safety stage drops flagged records before filtering") {
  CliFixture fx(10);
  // Rewrite the pool with two unsafe records.
  fx.pool.records[0].nsfw_image_score = 0.9;
  fx.pool.records[1].nsfw_text_scores = {{0, 0, 0.4, 0, 0, 0, 0}};
  write_pool(fx.pool, fx.meta, fx.tmp.path() / "emb");

  const auto out = fx.tmp.path() / "safe.dcmf";
  REQUIRE(run_cli("filter " + fx.pool_args() +
                  " --strategy no_filtering --safety --out " + out.string()) == 0);
  const SubsetManifest m = read_manifest(out);
  CHECK(m.size() == 8);
  CHECK_FALSE(m.contains(fx.pool.records[0].uid));
  CHECK_FALSE(m.contains(fx.pool.records[1].uid));
}

TEST_CASE("text sampling via the CLI hits the target size") {
  CliFixture fx(50);
  for (std::size_t i = 0; i < fx.pool.records.size(); ++i) {
    fx.pool.records[i].text = (i % 2 == 0) ? "a dog photo" : "a cat photo";
  }
  write_pool(fx.pool, fx.meta, fx.tmp.path() / "emb");
  const auto lexicon = fx.tmp.path() / "lexicon.tsv";
  write_text_file(lexicon, "dog\tn1\ncat\tn2\n");

  const auto out = fx.tmp.path() / "sampled.dcmf";
  REQUIRE(run_cli("sample " + fx.pool_args() + " --mode text --lexicon " +
                  lexicon.string() + " --alpha 0.5 --target-size 200 --seed 3 --out " +
                  out.string()) == 0);
  CHECK(read_manifest(out).size() == 200);
}

TEST_CASE("image sampling via the CLI uses reference cluster scores") {
  CliFixture fx(120);
  const auto refs_path = fx.tmp.path() / "refs.dcem";
  EmbeddingTable refs;
  refs.family = "refs";
  refs.rows = fx.pool.embeddings.at("clip_l14_image").rows.topRows(30);
  write_embedding_table(refs, refs_path);

  const auto out = fx.tmp.path() / "imgsample.dcmf";
  REQUIRE(run_cli("sample " + fx.pool_args() + " --mode image --references " +
                  refs_path.string() +
                  " --k 4 --alpha 1.0 --target-size 500 --seed 9 --repeat-cap 500 --out " +
                  out.string()) == 0);
  CHECK(read_manifest(out).size() == 500);
}

TEST_CASE("dedup CLI removes planted duplicates and flags eval matches") {
  CliFixture fx(64, 11);
  auto& rows = fx.pool.embeddings.at("clip_l14_image").rows;
  rows.row(1) = rows.row(0);
  fx.pool.records[0].clip_l14_similarity_score = 0.9;
  fx.pool.records[1].clip_l14_similarity_score = 0.1;
  write_pool(fx.pool, fx.meta, fx.tmp.path() / "emb");

  const auto out = fx.tmp.path() / "dedup.dcmf";
  REQUIRE(run_cli("dedup " + fx.pool_args() +
                  " --mode self --family clip_l14_image --t-adc 0.2 --knn 64 "
                  "--m 4 --bits 4 --seed 5 --out " +
                  out.string()) == 0);
  const SubsetManifest kept = read_manifest(out);
  CHECK(kept.contains(fx.pool.records[0].uid));
  CHECK_FALSE(kept.contains(fx.pool.records[1].uid));

  // Eval flagging against a copy of three pool rows.
  EmbeddingTable eval;
  eval.family = "eval";
  eval.rows = rows.topRows(3);
  const auto eval_path = fx.tmp.path() / "eval.dcem";
  write_embedding_table(eval, eval_path);
  const auto flags_path = fx.tmp.path() / "flags.tsv";
  REQUIRE(run_cli("dedup " + fx.pool_args() + " --mode eval --family clip_l14_image "
                  "--eval-embeddings " +
                  eval_path.string() + " --out " + flags_path.string()) == 0);
  std::ifstream flags(flags_path);
  std::string line;
  std::size_t flagged = 0, lines = 0;
  while (std::getline(flags, line)) {
    ++lines;
    if (line.ends_with("\t1")) ++flagged;
  }
  CHECK(lines == 64);
  CHECK(flagged >= 3);
}

TEST_CASE("reshard CLI extracts a manifest with verification") {
  TempDir tmp("cli-reshard");
  const auto in_dir = tmp.path() / "in";
  fs::create_directories(in_dir);
  std::vector<Uid> uids;
  for (int s = 0; s < 3; ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "shard-%08d.tar", s);
    std::ofstream file(in_dir / name, std::ios::binary);
    TarWriter writer(file);
    for (int i = 0; i < 20; ++i) {
      const Uid uid = fixture_uid(static_cast<std::uint64_t>(s * 20 + i));
      uids.push_back(uid);
      writer.add(uid.hex() + ".jpg", "jpg" + uid.hex());
      writer.add(uid.hex() + ".txt", "txt" + uid.hex());
      writer.add(uid.hex() + ".json", "{}");
    }
    writer.finish();
  }
  std::vector<Uid> subset(uids.begin(), uids.begin() + 25);
  subset.push_back(uids[0]);  // one duplicate
  const auto manifest_path = tmp.path() / "subset.dcmf";
  write_manifest(SubsetManifest(subset, "pool", "subset"), manifest_path);

  const auto out_dir = tmp.path() / "out";
  REQUIRE(run_cli("reshard --input-dir " + in_dir.string() + " --manifest " +
                  manifest_path.string() + " --out-dir " + out_dir.string() +
                  " --samples-per-shard 7 --workers 2 --verify") == 0);
  REQUIRE(fs::exists(out_dir / "reshard-report.json"));
  json report;
  std::ifstream(out_dir / "reshard-report.json") >> report;
  CHECK(report["shards_read"] == 3);
  CHECK(report["samples_written"] == 26);
  CHECK(report["missing_uids"].empty());
}

TEST_CASE("stats CLI writes histogram JSON") {
  CliFixture fx(25);
  const auto out = fx.tmp.path() / "stats.json";
  REQUIRE(run_cli("stats " + fx.pool_args() + " --out " + out.string()) == 0);
  json stats;
  std::ifstream(out) >> stats;
  CHECK(stats["row_count"] == 25);
  std::uint64_t total = 0;
  for (const auto& c :
       stats["score_histograms"]["clip_b32_similarity_score"]["counts"]) {
    total += c.get<std::uint64_t>();
  }
  CHECK(total == 25);
}

TEST_CASE("metrics CLI aggregates prediction files through the registry") {
  TempDir tmp("cli-metrics");
  const auto registry = tmp.path() / "registry.json";
  write_text_file(registry, R"([
    {"task": "alpha", "metric": "accuracy", "clean": true},
    {"task": "beta", "metric": "jaccard", "clean": false}
  ])");
  write_text_file(tmp.path() / "alpha.jsonl",
                  R"({"id":"1","gold":"a","ranking":["a"]})"
                  "\n"
                  R"({"id":"2","gold":"b","ranking":["c"]})"
                  "\n");
  write_text_file(tmp.path() / "beta.jsonl",
                  R"({"id":"1","gold":["a","b"],"ranking":["b","c"]})"
                  "\n");
  const auto out = tmp.path() / "report.json";
  REQUIRE(run_cli("metrics --registry " + registry.string() + " --predictions alpha=" +
                  (tmp.path() / "alpha.jsonl").string() + " --predictions beta=" +
                  (tmp.path() / "beta.jsonl").string() + " --out " + out.string()) == 0);
  json report;
  std::ifstream(out) >> report;
  CHECK(report["per_task"].size() == 2);
  CHECK(report["average"].get<double>() == doctest::Approx((0.5 + 1.0 / 3.0) / 2));
  CHECK(report["clean_average"].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("exit codes map error classes") {
  CliFixture fx(5);
  // Unknown strategy: config error -> 2.
  CHECK(run_cli("filter " + fx.pool_args() + " --strategy bogus --out /tmp/x.dcmf") == 2);
  // Missing input file: config error (validation-time existence check) -> 2.
  CHECK(run_cli("filter --pool-meta /nonexistent.jsonl --strategy no_filtering "
                "--out /tmp/x.dcmf") == 2);
  // Corrupt manifest: format/data error -> 3.
  const auto bad = fx.tmp.path() / "bad.dcmf";
  write_text_file(bad, "XXXXnotamanifest");
  CHECK(run_cli("reshard --input-dir " + fx.tmp.path().string() + " --manifest " +
                bad.string() + " --out-dir " + (fx.tmp.path() / "o").string()) == 3);
  // Bad flag: parse error -> 2.
  CHECK(run_cli("filter --no-such-flag") == 2);
}

TEST_CASE("failed runs leave no partial outputs") {
  CliFixture fx(5);
  const auto out = fx.tmp.path() / "dir" / "x.dcmf";
  fs::create_directories(out.parent_path());
  // synset_text without a lexicon fails after the pool loads.
  CHECK(run_cli("filter " + fx.pool_args() + " --strategy text_based --out " +
                out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
}
