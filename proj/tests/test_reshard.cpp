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
#include <algorithm>
#include <cstring>
#include <map>
#include <random>

#include "curate/reshard.hpp"
#include "curate/tar.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace curate;
using namespace curate::test;

namespace {

struct FixturePool {
  std::filesystem::path dir;
  /// Ground truth in scan order: (uid, jpg bytes, txt bytes, json bytes).
  std::vector<ShardSample> samples;
};

std::string payload_for(const Uid& uid, const char* kind) {
  return std::string(kind) + ":" + uid.hex();
}

/// Builds `shards` x `per_shard` samples with deterministic payloads.
FixturePool build_fixture(const std::filesystem::path& dir, std::size_t shards,
                          std::size_t per_shard) {
  std::filesystem::create_directories(dir);
  FixturePool fx;
  fx.dir = dir;
  std::size_t next = 0;
  for (std::size_t s = 0; s < shards; ++s) {
    char name[32];
    std::snprintf(name, sizeof(name), "shard-%08zu.tar", s);
    std::ofstream out(dir / name, std::ios::binary);
    TarWriter writer(out);
    for (std::size_t i = 0; i < per_shard; ++i) {
      const Uid uid = fixture_uid(next++);
      ShardSample sample;
      sample.key = uid.hex();
      sample.jpg = payload_for(uid, "jpg");
      sample.txt = payload_for(uid, "txt");
      sample.json = "{\"uid\":\"" + uid.hex() + "\"}";
      writer.add(sample.key + ".jpg", sample.jpg);
      writer.add(sample.key + ".txt", sample.txt);
      writer.add(sample.key + ".json", sample.json);
      fx.samples.push_back(std::move(sample));
    }
    writer.finish();
  }
  return fx;
}

/// Independent minimal tar parser used as the extraction oracle.
std::vector<std::pair<std::string, std::string>> oracle_untar(
    const std::filesystem::path& file) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::ifstream in(file, std::ios::binary);
  std::string header(512, '\0');
  while (in.read(header.data(), 512) && in.gcount() == 512) {
    if (header.find_first_not_of('\0') == std::string::npos) break;
    const std::string name(header.c_str(), strnlen(header.c_str(), 100));
    std::size_t size = 0;
    for (int i = 124; i < 136 && header[i] >= '0' && header[i] <= '7'; ++i) {
      size = size * 8 + static_cast<std::size_t>(header[i] - '0');
    }
    std::string data(size, '\0');
    in.read(data.data(), static_cast<std::streamsize>(size));
    const std::size_t padded = (size + 511) / 512 * 512;
    in.ignore(static_cast<std::streamsize>(padded - size));
    entries.emplace_back(name, std::move(data));
  }
  return entries;
}

std::vector<std::pair<std::string, std::string>> oracle_extract_all(
    const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& shard : list_shards(dir)) {
    auto part = oracle_untar(shard);
    entries.insert(entries.end(), part.begin(), part.end());
  }
  return entries;
}

std::map<Uid, std::size_t> observed_multiplicities(const std::filesystem::path& dir) {
  std::map<Uid, std::size_t> out;
  for (const auto& [name, data] : oracle_extract_all(dir)) {
    if (!name.ends_with(".jpg")) continue;
    std::string key = name.substr(0, name.size() - 4);
    if (auto dash = key.find('-'); dash != std::string::npos) key = key.substr(0, dash);
    out[Uid::from_hex(key)] += 1;
  }
  return out;
}

}  // namespace

TEST_CASE("identity manifest reshards every payload byte-for-byte") {
  TempDir tmp("reshard-identity");
  FixturePool fx = build_fixture(tmp.path() / "in", 4, 25);

  std::vector<Uid> all;
  for (const auto& s : fx.samples) all.push_back(Uid::from_hex(s.key));
  SubsetManifest manifest(all, "fixture", "all");

  const auto report = reshard(fx.dir, manifest, tmp.path() / "out", 10);
  CHECK(report.shards_read == 4);
  CHECK(report.samples_scanned == 100);
  CHECK(report.samples_written == 100);
  CHECK(report.missing_uids.empty());
  CHECK(report.shard_errors.empty());

  // Output payloads equal input payloads, per key.
  std::map<std::string, std::string> by_name;
  for (auto& [name, data] : oracle_extract_all(tmp.path() / "out")) {
    by_name[name] = data;
  }
  CHECK(by_name.size() == 300);
  for (const auto& s : fx.samples) {
    CHECK(by_name.at(s.key + ".jpg") == s.jpg);
    CHECK(by_name.at(s.key + ".txt") == s.txt);
    CHECK(by_name.at(s.key + ".json") == s.json);
  }
  CHECK(verify_shards(tmp.path() / "out", manifest));
}

TEST_CASE("duplicate manifest uids produce adjacent re-keyed copies") {
  TempDir tmp("reshard-dup");
  FixturePool fx = build_fixture(tmp.path() / "in", 1, 5);
  const Uid dup = Uid::from_hex(fx.samples[2].key);
  SubsetManifest manifest({dup, dup}, "fixture", "dup");

  const auto report = reshard(fx.dir, manifest, tmp.path() / "out", 1000);
  CHECK(report.samples_written == 2);

  const auto entries = oracle_extract_all(tmp.path() / "out");
  REQUIRE(entries.size() == 6);
  CHECK(entries[0].first == dup.hex() + ".jpg");
  CHECK(entries[3].first == dup.hex() + "-1.jpg");
  CHECK(entries[0].second == entries[3].second);  // byte-identical copies
  CHECK(verify_shards(tmp.path() / "out", manifest));
}

TEST_CASE("random subset matches the extraction oracle with missing uids reported") {
  TempDir tmp("reshard-subset");
  FixturePool fx = build_fixture(tmp.path() / "in", 100, 100);

  std::mt19937_64 gen(5);
  std::vector<Uid> chosen;
  std::map<Uid, std::size_t> want;
  for (const auto& s : fx.samples) {
    if (gen() % 100 < 30) {
      const Uid u = Uid::from_hex(s.key);
      chosen.push_back(u);
      want[u] += 1;
    }
  }
  // Ten duplicated uids and five uids absent from the pool.
  for (int i = 0; i < 10; ++i) {
    const Uid u = chosen[gen() % chosen.size()];
    chosen.push_back(u);
    want[u] += 1;
  }
  std::vector<Uid> missing;
  for (int i = 0; i < 5; ++i) {
    const Uid u = fixture_uid(1000000 + i);
    missing.push_back(u);
    chosen.push_back(u);
  }
  std::sort(missing.begin(), missing.end());

  SubsetManifest manifest(chosen, "fixture", "subset30");
  const auto report = reshard(fx.dir, manifest, tmp.path() / "out", 1000);

  CHECK(report.shards_read == 100);  // one pass
  CHECK(report.samples_scanned == 10000);
  std::size_t expected_written = 0;
  for (const auto& [u, k] : want) expected_written += k;
  CHECK(report.samples_written == expected_written);
  CHECK(report.missing_uids == missing);

  CHECK(observed_multiplicities(tmp.path() / "out") == want);
  CHECK(verify_shards(tmp.path() / "out", manifest, report.missing_uids));
  CHECK_FALSE(verify_shards(tmp.path() / "out", manifest));  // missing unaccounted
}

TEST_CASE("plan_partitions splits contiguously and evenly") {
  using Ranges = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(plan_partitions(10, 2) == Ranges{{0, 5}, {5, 10}});
  CHECK(plan_partitions(10, 1) == Ranges{{0, 10}});
  CHECK(plan_partitions(3, 5) == Ranges{{0, 1}, {1, 2}, {2, 3}, {3, 3}, {3, 3}});
  const auto r = plan_partitions(100, 7);
  CHECK(r.size() == 7);
  CHECK(r.front().first == 0);
  CHECK(r.back().second == 100);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i].first == r[i - 1].second);
}

TEST_CASE("partitioned reshard output is byte-identical to single-worker output") {
  TempDir tmp("reshard-parallel");
  FixturePool fx = build_fixture(tmp.path() / "in", 20, 30);

  std::mt19937_64 gen(9);
  std::vector<Uid> chosen;
  for (const auto& s : fx.samples) {
    if (gen() % 100 < 40) chosen.push_back(Uid::from_hex(s.key));
  }
  SubsetManifest manifest(chosen, "fixture", "subset");

  const auto serial = reshard(fx.dir, manifest, tmp.path() / "serial", 37);
  const auto parallel = reshard_parallel(fx.dir, manifest, tmp.path() / "parallel", 37, 7);

  CHECK(serial.samples_written == parallel.samples_written);
  CHECK(serial.bytes_written == parallel.bytes_written);
  CHECK(parallel.shards_read == 20);

  const auto serial_shards = list_shards(tmp.path() / "serial");
  const auto parallel_shards = list_shards(tmp.path() / "parallel");
  REQUIRE(serial_shards.size() == parallel_shards.size());
  for (std::size_t i = 0; i < serial_shards.size(); ++i) {
    CHECK(serial_shards[i].filename() == parallel_shards[i].filename());
    CHECK(read_file_bytes(serial_shards[i]) == read_file_bytes(parallel_shards[i]));
  }
}

TEST_CASE("reshard refuses a non-empty output directory") {
  TempDir tmp("reshard-refuse");
  FixturePool fx = build_fixture(tmp.path() / "in", 1, 3);
  std::filesystem::create_directories(tmp.path() / "out");
  write_text_file(tmp.path() / "out/already-here.txt", "x");
  SubsetManifest manifest({Uid::from_hex(fx.samples[0].key)}, "fixture", "s");
  CHECK_THROWS_AS(reshard(fx.dir, manifest, tmp.path() / "out"), ConfigError);
}

TEST_CASE("corrupt shards are reported and the scan continues") {
  TempDir tmp("reshard-corrupt");
  FixturePool fx = build_fixture(tmp.path() / "in", 3, 10);

  // Flip a byte inside the second shard's first header.
  const auto victim = tmp.path() / "in/shard-00000001.tar";
  std::string bytes = read_file_bytes(victim);
  bytes[60] = static_cast<char>(bytes[60] ^ 0x7f);
  write_text_file(victim, bytes);

  std::vector<Uid> all;
  for (const auto& s : fx.samples) all.push_back(Uid::from_hex(s.key));
  SubsetManifest manifest(all, "fixture", "all");

  const auto report = reshard(fx.dir, manifest, tmp.path() / "out", 1000);
  CHECK(report.shards_read == 3);  // every shard opened once
  CHECK(!report.shard_errors.empty());
  CHECK(report.shard_errors.front().find("shard 1") != std::string::npos);
  // Shards 0 and 2 still contributed their samples.
  CHECK(report.samples_written == 20);
  CHECK(report.missing_uids.size() == 10);
}

TEST_CASE("verify_shards detects deletions and key mutations") {
  TempDir tmp("reshard-verify");
  FixturePool fx = build_fixture(tmp.path() / "in", 2, 8);
  std::vector<Uid> all;
  for (const auto& s : fx.samples) all.push_back(Uid::from_hex(s.key));
  SubsetManifest manifest(all, "fixture", "all");
  reshard(fx.dir, manifest, tmp.path() / "out", 6);
  REQUIRE(verify_shards(tmp.path() / "out", manifest));

  SUBCASE("deleting one entry fails verification naming the uid") {
    // Rebuild the first output shard without one sample's txt entry.
    const auto shard0 = list_shards(tmp.path() / "out")[0];
    const auto entries = oracle_untar(shard0);
    std::ofstream out(shard0, std::ios::binary | std::ios::trunc);
    TarWriter writer(out);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i == 1) continue;  // drop one .txt
      writer.add(entries[i].first, entries[i].second);
    }
    writer.finish();

    VerifyDiff diff;
    CHECK_FALSE(verify_shards(tmp.path() / "out", manifest, {}, &diff));
    REQUIRE(!diff.problems.empty());
    const std::string key0 = entries[0].first.substr(0, 32);
    bool named = false;
    for (const auto& p : diff.problems) {
      if (p.find(key0) != std::string::npos) named = true;
    }
    CHECK(named);
  }

  SUBCASE("flipping one byte of a key name fails verification") {
    const auto shard0 = list_shards(tmp.path() / "out")[0];
    const auto entries = oracle_untar(shard0);
    std::ofstream out(shard0, std::ios::binary | std::ios::trunc);
    TarWriter writer(out);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      std::string name = entries[i].first;
      if (i == 0) name[3] = name[3] == 'a' ? 'b' : 'a';
      writer.add(name, entries[i].second);
    }
    writer.finish();
    CHECK_FALSE(verify_shards(tmp.path() / "out", manifest));
  }
}

TEST_CASE("reshard report serializes to JSON") {
  ReshardReport report;
  report.shards_read = 3;
  report.samples_scanned = 30;
  report.samples_written = 7;
  report.missing_uids = {fixture_uid(1)};
  report.bytes_written = 4096;
  const auto j = report.to_json();
  CHECK(j["shards_read"] == 3);
  CHECK(j["missing_uids"][0] == fixture_uid(1).hex());
}
