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
#include <random>

#include "curate/pool_io.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace curate;
using namespace curate::test;

namespace {

PoolView small_pool(std::size_t n, std::size_t dim, std::uint64_t seed) {
  PoolView pool;
  pool.pool_id = "fixture";
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    SampleRecord r = fixture_record(i, unit(gen) * 2 - 1, unit(gen) * 2 - 1);
    if (i % 3 == 0) r.sha256 = std::string(64, 'a');
    if (i % 2 == 0) r.nsfw_image_score = unit(gen);
    if (i % 5 == 0) {
      r.nsfw_text_scores = {{0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07}};
    }
    if (i % 4 == 1) r.face_bboxes.push_back({0.1, 0.2, 0.3, 0.4});
    pool.records.push_back(std::move(r));
  }
  if (dim > 0) {
    EmbeddingTable table;
    table.family = "clip_l14_image";
    table.rows = random_unit_rows(n, dim, seed + 1);
    pool.embeddings["clip_l14_image"] = std::move(table);
  }
  return pool;
}

}  // namespace

TEST_CASE("read_pool loads aligned records and sidecars") {
  TempDir tmp("pool");
  PoolView pool = small_pool(3, 4, 1);
  write_pool(pool, tmp.path() / "meta.jsonl", tmp.path() / "emb");

  const PoolView back = read_pool(tmp.path() / "meta.jsonl",
                                  {{"clip_l14_image", tmp.path() / "emb/clip_l14_image.dcem"}});
  CHECK(back.row_count() == 3);
  CHECK(back.embedding("clip_l14_image").count() == 3);
  CHECK(back.embedding("clip_l14_image").dim() == 4);
}

TEST_CASE("row-count mismatch between metadata and sidecar is an alignment error") {
  TempDir tmp("pool-misaligned");
  PoolView pool = small_pool(3, 0, 2);
  write_pool(pool, tmp.path() / "meta.jsonl", tmp.path() / "emb");

  EmbeddingTable twoRows;
  twoRows.family = "clip_l14_image";
  twoRows.rows = random_unit_rows(2, 4, 3);
  write_embedding_table(twoRows, tmp.path() / "short.dcem");

  CHECK_THROWS_AS(read_pool(tmp.path() / "meta.jsonl",
                            {{"clip_l14_image", tmp.path() / "short.dcem"}}),
                  DataError);
}

TEST_CASE("pool round trip preserves records exactly and embeddings to f32") {
  TempDir tmp("pool-roundtrip");
  PoolView pool = small_pool(1000, 8, 4);
  write_pool(pool, tmp.path() / "meta.jsonl", tmp.path() / "emb");
  const PoolView back = read_pool(tmp.path() / "meta.jsonl",
                                  {{"clip_l14_image", tmp.path() / "emb/clip_l14_image.dcem"}});

  REQUIRE(back.row_count() == pool.row_count());
  for (std::size_t i = 0; i < pool.row_count(); ++i) {
    const auto& a = pool.records[i];
    const auto& b = back.records[i];
    CHECK(a.uid == b.uid);
    CHECK(a.url == b.url);
    CHECK(a.text == b.text);
    CHECK(a.original_width == b.original_width);
    CHECK(a.original_height == b.original_height);
    CHECK(a.sha256 == b.sha256);
    CHECK(a.clip_b32_similarity_score == b.clip_b32_similarity_score);
    CHECK(a.clip_l14_similarity_score == b.clip_l14_similarity_score);
    CHECK(a.nsfw_image_score == b.nsfw_image_score);
    CHECK(a.dedup_score == b.dedup_score);
    CHECK(a.face_bboxes.size() == b.face_bboxes.size());
  }
  const auto& rows_a = pool.embeddings.at("clip_l14_image").rows;
  const auto& rows_b = back.embeddings.at("clip_l14_image").rows;
  REQUIRE(rows_a.rows() == rows_b.rows());
  for (Eigen::Index i = 0; i < rows_a.size(); ++i) {
    CHECK(std::abs(rows_a.data()[i] - rows_b.data()[i]) < 1e-6f);
  }
}

TEST_CASE("round trip is byte-exact for exactly-normalized rows") {
  // Rows with dyadic components and exact unit norm are fixed points of the
  // loader's renormalization, so the sidecar round-trips bit-for-bit.
  TempDir tmp("pool-bytes");
  PoolView pool = small_pool(8, 4, 5);
  MatrixF rows(8, 4);
  rows.setZero();
  std::mt19937_64 gen(6);
  for (int i = 0; i < 8; ++i) {
    if (i % 2 == 0) {
      rows(i, static_cast<int>(gen() % 4)) = (gen() % 2) ? 1.0f : -1.0f;
    } else {
      for (int j = 0; j < 4; ++j) rows(i, j) = (gen() % 2) ? 0.5f : -0.5f;
    }
  }
  pool.embeddings["clip_l14_image"].rows = rows;

  write_pool(pool, tmp.path() / "meta.jsonl", tmp.path() / "emb");
  const auto sidecar = tmp.path() / "emb/clip_l14_image.dcem";
  const std::string bytes_before = read_file_bytes(sidecar);

  const PoolView back = read_pool(tmp.path() / "meta.jsonl", {{"clip_l14_image", sidecar}});
  TempDir tmp2("pool-bytes-2");
  write_pool(back, tmp2.path() / "meta.jsonl", tmp2.path() / "emb");
  CHECK(read_file_bytes(tmp2.path() / "emb/clip_l14_image.dcem") == bytes_before);
  CHECK(read_file_bytes(tmp2.path() / "meta.jsonl") ==
        read_file_bytes(tmp.path() / "meta.jsonl"));
}

TEST_CASE("empty pool writes a zero-line record file and count-0 sidecar") {
  TempDir tmp("pool-empty");
  PoolView pool;
  pool.pool_id = "empty";
  EmbeddingTable table;
  table.family = "clip_l14_image";
  table.rows.resize(0, 4);
  pool.embeddings["clip_l14_image"] = std::move(table);

  write_pool(pool, tmp.path() / "meta.jsonl", tmp.path() / "emb");
  CHECK(std::filesystem::file_size(tmp.path() / "meta.jsonl") == 0);

  const EmbeddingTable back =
      read_embedding_table(tmp.path() / "emb/clip_l14_image.dcem");
  CHECK(back.count() == 0);
  CHECK(back.dim() == 4);
}

TEST_CASE("sidecar payload for one dim-2 row (1,0) is exactly 8 bytes") {
  TempDir tmp("sidecar-size");
  EmbeddingTable table;
  table.family = "f";
  table.rows.resize(1, 2);
  table.rows << 1.0f, 0.0f;
  const auto path = tmp.path() / "f.dcem";
  write_embedding_table(table, path);

  // Header: magic(4) + version(4) + dim(4) + count(8) + namelen(2) + name(1).
  const std::string bytes = read_file_bytes(path);
  REQUIRE(bytes.size() == 4 + 4 + 4 + 8 + 2 + 1 + 8);
  float payload[2];
  std::memcpy(payload, bytes.data() + bytes.size() - 8, 8);
  CHECK(payload[0] == 1.0f);
  CHECK(payload[1] == 0.0f);
}

TEST_CASE("record JSON uses the exact key set, omitting absent optionals") {
  SampleRecord r = fixture_record(1, 0.25, 0.5);
  const auto j = record_to_json(r);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"uid", "url", "text", "original_width",
                                         "original_height", "clip_b32_similarity_score",
                                         "clip_l14_similarity_score", "face_bboxes"});

  r.sha256 = std::string(64, 'b');
  r.nsfw_image_score = 0.5;
  r.nsfw_text_scores = {{0, 0, 0, 0, 0, 0, 0}};
  r.dedup_score = 0.1;
  const auto full = record_to_json(r);
  keys.clear();
  for (auto it = full.begin(); it != full.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{
                    "uid", "url", "text", "original_width", "original_height", "sha256",
                    "clip_b32_similarity_score", "clip_l14_similarity_score",
                    "face_bboxes", "nsfw_image_score", "nsfw_text_scores", "dedup_score"});
  CHECK(full.dump().find("null") == std::string::npos);
}

TEST_CASE("schema and validation errors are reported with line numbers") {
  TempDir tmp("pool-bad");
  // Missing required key `url`.
  write_text_file(tmp.path() / "missing.jsonl",
                  R"({"uid":"00000000000000000000000000000001","text":"x",)"
                  R"("original_width":10,"original_height":10,)"
                  R"("clip_b32_similarity_score":0,"clip_l14_similarity_score":0,)"
                  R"("face_bboxes":[]})"
                  "\n");
  CHECK_THROWS_AS(read_pool(tmp.path() / "missing.jsonl"), DataError);

  // Malformed face box (x0 >= x1).
  write_text_file(tmp.path() / "badbox.jsonl",
                  R"({"uid":"00000000000000000000000000000001","url":"u","text":"x",)"
                  R"("original_width":10,"original_height":10,)"
                  R"("clip_b32_similarity_score":0,"clip_l14_similarity_score":0,)"
                  R"("face_bboxes":[[0.5,0.1,0.4,0.2]]})"
                  "\n");
  CHECK_THROWS_AS(read_pool(tmp.path() / "badbox.jsonl"), ValidationError);

  // Not JSON at all.
  write_text_file(tmp.path() / "garbage.jsonl", "not json\n");
  CHECK_THROWS_AS(read_pool(tmp.path() / "garbage.jsonl"), FormatError);
}

TEST_CASE("non-finite embedding values are a data error") {
  TempDir tmp("pool-nan");
  PoolView pool = small_pool(2, 0, 7);
  write_pool(pool, tmp.path() / "meta.jsonl", tmp.path() / "emb");

  EmbeddingTable bad;
  bad.family = "clip_l14_image";
  bad.rows.resize(2, 2);
  bad.rows << 1.0f, 0.0f, std::numeric_limits<float>::quiet_NaN(), 1.0f;
  write_embedding_table(bad, tmp.path() / "bad.dcem");
  CHECK_THROWS_AS(read_pool(tmp.path() / "meta.jsonl",
                            {{"clip_l14_image", tmp.path() / "bad.dcem"}}),
                  DataError);
}

TEST_CASE("loaded embedding rows are unit-norm within 1e-3") {
  TempDir tmp("pool-norm");
  EmbeddingTable table;
  table.family = "f";
  table.rows.resize(3, 4);
  table.rows << 2.0f, 0.0f, 0.0f, 0.0f,   // needs renormalization
      0.3f, 0.4f, 0.0f, 0.0f,
      1.0f, 1.0f, 1.0f, 1.0f;
  write_embedding_table(table, tmp.path() / "f.dcem");
  const EmbeddingTable back = read_embedding_table(tmp.path() / "f.dcem");
  for (Eigen::Index i = 0; i < back.count(); ++i) {
    CHECK(std::abs(dot_accum(back.row(i), back.row(i), back.dim()) - 1.0) < 1e-3);
  }
}

TEST_CASE("parallel pool reading preserves file order") {
  TempDir tmp("pool-parallel");
  PoolView pool = small_pool(500, 0, 8);
  write_pool(pool, tmp.path() / "meta.jsonl", tmp.path() / "emb");
  const PoolView serial = read_pool(tmp.path() / "meta.jsonl", {}, 1);
  const PoolView parallel = read_pool(tmp.path() / "meta.jsonl", {}, 4);
  REQUIRE(serial.row_count() == parallel.row_count());
  for (std::size_t i = 0; i < serial.row_count(); ++i) {
    CHECK(serial.records[i].uid == parallel.records[i].uid);
  }
}

TEST_CASE("pool stats bins scores, ratios, words and faces as declared") {
  PoolView pool;
  pool.pool_id = "stats";
  SampleRecord r = fixture_record(0, 0.30, 0.30);
  r.original_width = 400;
  r.original_height = 200;  // ratio 2.0
  r.text = "three word caption";
  pool.records.push_back(r);

  const PoolStats stats = compute_pool_stats(pool);
  // Score 0.30 lands in bin [0.30, 0.31): index (0.30 + 1) / 0.01 = 130.
  CHECK(stats.score_histograms.at("clip_b32_similarity_score").counts[130] == 1);
  CHECK(stats.score_histograms.at("clip_l14_similarity_score").counts[130] == 1);
  // Ratio 2.0 -> bin [2.0, 2.1): index (2.0 - 1.0) / 0.1 = 10.
  CHECK(stats.aspect_ratio_histogram.counts[10] == 1);
  CHECK(stats.caption_word_count_histogram.counts[3] == 1);
  CHECK(stats.face_count_histogram.counts[0] == 1);

  CHECK(stats.score_histograms.at("clip_b32_similarity_score").total() == 1);
  CHECK(stats.aspect_ratio_histogram.total() == 1);
  CHECK(stats.caption_word_count_histogram.total() == 1);
  CHECK(stats.face_count_histogram.total() == 1);
}

TEST_CASE("uniform scores populate bins within 5 sigma of the binomial mean") {
  PoolView pool;
  pool.pool_id = "uniform";
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    pool.records.push_back(fixture_record(i, unit(gen), 0.0));
  }
  const PoolStats stats = compute_pool_stats(pool);
  const auto& h = stats.score_histograms.at("clip_b32_similarity_score");
  CHECK(h.total() == n);
  // Bins 100..199 cover [0,1]; each expects n*p = 100 with sigma ~9.95.
  const double sigma = std::sqrt(10000 * 0.01 * 0.99);
  for (int b = 100; b < 200; ++b) {
    CHECK(std::abs(static_cast<double>(h.counts[b]) - 100.0) < 5.0 * sigma);
  }
}

TEST_CASE("histogram totals equal row count on a mixed pool") {
  PoolView pool = small_pool(777, 0, 9);
  const PoolStats stats = compute_pool_stats(pool);
  CHECK(stats.row_count == 777);
  for (const auto& [family, h] : stats.score_histograms) CHECK(h.total() == 777);
  CHECK(stats.aspect_ratio_histogram.total() == 777);
  CHECK(stats.caption_word_count_histogram.total() == 777);
  CHECK(stats.face_count_histogram.total() == 777);
}
