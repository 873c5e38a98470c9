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
#include <cstring>
#include <map>
#include <set>

#include "curate/manifest.hpp"
#include "curate/uid.hpp"

#include "doctest.h"
#include "test_support.hpp"

using namespace curate;
using namespace curate::test;

TEST_CASE("derive_uid of empty inputs is the empty-string digest") {
  // MD5("") is the canonical empty digest.
  CHECK(derive_uid("", "").hex() == "d41d8cd98f00b204e9800998ecf8427e");
}

TEST_CASE("derive_uid is deterministic") {
  const Uid a = derive_uid("http://a", "cat");
  const Uid b = derive_uid("http://a", "cat");
  CHECK(a == b);
  CHECK(derive_uid("http://a", "cat", DigestKind::sha256_128) ==
        derive_uid("http://a", "cat", DigestKind::sha256_128));
  CHECK(derive_uid("http://a", "cat", DigestKind::sha256_128) != a);
}

TEST_CASE("derive_uid concatenates url then text with no separator") {
  CHECK(derive_uid("ab", "c") == derive_uid("a", "bc"));
  CHECK(derive_uid("ab", "c") == derive_uid("", "abc"));
}

TEST_CASE("1000 random url/text pairs yield 1000 distinct uids") {
  std::mt19937_64 gen(7);
  std::set<Uid> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::string url = "http://host/" + std::to_string(gen());
    const std::string text = "caption " + std::to_string(gen());
    seen.insert(derive_uid(url, text));
  }
  CHECK(seen.size() == 1000);
}

TEST_CASE("uid hex form round-trips and orders like the 128-bit value") {
  std::mt19937_64 gen(11);
  Uid prev;
  for (int i = 0; i < 200; ++i) {
    Uid::Bytes bytes;
    for (auto& b : bytes) b = static_cast<std::uint8_t>(gen());
    const Uid u(bytes);
    CHECK(Uid::from_hex(u.hex()) == u);
    CHECK(u.hex().size() == 32);
    if (i > 0) {
      // Byte-lexicographic (unsigned integer) order agrees with hex order.
      CHECK((prev < u) == (prev.hex() < u.hex()));
    }
    prev = u;
  }
}

TEST_CASE("uid parsing rejects malformed text forms") {
  CHECK_THROWS_AS(Uid::from_hex("abc"), FormatError);
  CHECK_THROWS_AS(Uid::from_hex("ABCDABCDABCDABCDABCDABCDABCDABCD"), FormatError);
  CHECK_THROWS_AS(Uid::from_hex("zzzzzzzzzzzzzzzzzzzzzzzzzzzzzzzz"), FormatError);
  CHECK_NOTHROW(Uid::from_hex("0123456789abcdef0123456789abcdef"));
}

TEST_CASE("manifest file of 3 uids is 24 + 48 bytes and round-trips") {
  TempDir tmp("manifest");
  const auto path = tmp.path() / "m.dcmf";
  SubsetManifest m({fixture_uid(3), fixture_uid(1), fixture_uid(2)}, "pool", "s");
  write_manifest(m, path);
  CHECK(std::filesystem::file_size(path) == 24 + 48);
  const SubsetManifest back = read_manifest(path);
  CHECK(back.uids() == m.uids());
}

TEST_CASE("empty manifest is header-only and round-trips to empty") {
  TempDir tmp("manifest-empty");
  const auto path = tmp.path() / "m.dcmf";
  write_manifest(SubsetManifest({}, "pool", "s"), path);
  CHECK(std::filesystem::file_size(path) == 24);
  CHECK(read_manifest(path).empty());
}

TEST_CASE("duplicate uid appears as adjacent identical 16-byte entries") {
  TempDir tmp("manifest-dup");
  const auto path = tmp.path() / "m.dcmf";
  const Uid u = fixture_uid(42);
  write_manifest(SubsetManifest({u, u}, "pool", "s"), path);
  const std::string bytes = read_file_bytes(path);
  REQUIRE(bytes.size() == 24 + 32);
  CHECK(bytes.substr(24, 16) == bytes.substr(40, 16));
  CHECK(std::memcmp(bytes.data() + 24, u.bytes().data(), 16) == 0);
}

TEST_CASE("manifest round-trip identity over random multisets") {
  TempDir tmp("manifest-prop");
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Uid> uids;
    const int distinct = 1 + static_cast<int>(gen() % 50);
    for (int i = 0; i < distinct; ++i) {
      const Uid u = fixture_uid(gen() % 1000);
      const int mult = 1 + static_cast<int>(gen() % 4);
      for (int k = 0; k < mult; ++k) uids.push_back(u);
    }
    SubsetManifest m(std::move(uids), "pool", "prop");
    const auto path = tmp.path() / ("m" + std::to_string(trial) + ".dcmf");
    write_manifest(m, path);
    const SubsetManifest back = read_manifest(path);
    CHECK(back.uids() == m.uids());
  }
}

TEST_CASE("manifest constructor sorts and enforces the repeat cap") {
  SubsetManifest m({fixture_uid(9), fixture_uid(2), fixture_uid(5)}, "p", "s");
  for (std::size_t i = 1; i < m.size(); ++i) {
    CHECK(!(m.uids()[i] < m.uids()[i - 1]));
  }
  const Uid u = fixture_uid(1);
  CHECK_THROWS_AS(SubsetManifest({u, u, u}, "p", "s", 2), ValidationError);
  CHECK_NOTHROW(SubsetManifest({u, u}, "p", "s", 2));
}

TEST_CASE("read_manifest rejects malformed files") {
  TempDir tmp("manifest-bad");

  const auto bad_magic = tmp.path() / "magic.dcmf";
  write_text_file(bad_magic, std::string("XXXX") + std::string(20, '\0'));
  CHECK_THROWS_AS(read_manifest(bad_magic), FormatError);

  const auto truncated = tmp.path() / "trunc.dcmf";
  {
    write_manifest(SubsetManifest({fixture_uid(1), fixture_uid(2)}, "p", "s"), truncated);
    std::filesystem::resize_file(truncated, 24 + 16 + 8);
  }
  CHECK_THROWS_AS(read_manifest(truncated), FormatError);

  // Hand-build an unsorted payload: header for 2 uids, descending order.
  const auto unsorted = tmp.path() / "unsorted.dcmf";
  {
    const auto sorted_path = tmp.path() / "sorted.dcmf";
    write_manifest(SubsetManifest({fixture_uid(1), fixture_uid(2)}, "p", "s"), sorted_path);
    std::string bytes = read_file_bytes(sorted_path);
    std::string swapped = bytes.substr(0, 24) + bytes.substr(40, 16) + bytes.substr(24, 16);
    write_text_file(unsorted, swapped);
  }
  CHECK_THROWS_AS(read_manifest(unsorted), ValidationError);
}

namespace {

/// Independent multiset oracle for intersect/unite.
std::map<Uid, std::size_t> to_counts(const SubsetManifest& m) {
  std::map<Uid, std::size_t> counts;
  for (const Uid& u : m.uids()) counts[u] += 1;
  return counts;
}

SubsetManifest random_manifest(std::mt19937_64& gen, const std::string& label) {
  std::vector<Uid> uids;
  const int n = static_cast<int>(gen() % 30);
  for (int i = 0; i < n; ++i) {
    const Uid u = fixture_uid(gen() % 20);
    for (std::size_t k = 0; k <= gen() % 3; ++k) uids.push_back(u);
  }
  return SubsetManifest(std::move(uids), "pool", label);
}

}  // namespace

TEST_CASE("intersect takes min multiplicity, unite takes max") {
  const Uid u1 = fixture_uid(1), u2 = fixture_uid(2), u3 = fixture_uid(3);
  SubsetManifest a({u1, u2}, "pool", "a");
  SubsetManifest b({u2, u3}, "pool", "b");
  CHECK(intersect(a, b).uids() == std::vector<Uid>{u2});

  SubsetManifest aa({u1, u1}, "pool", "a");
  SubsetManifest bb({u1}, "pool", "b");
  CHECK(intersect(aa, bb).uids() == std::vector<Uid>{u1});
  CHECK(unite(aa, bb).uids() == std::vector<Uid>{u1, u1});
}

TEST_CASE("manifest algebra matches the multiset oracle and its laws") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 50; ++trial) {
    const SubsetManifest a = random_manifest(gen, "a");
    const SubsetManifest b = random_manifest(gen, "b");
    const SubsetManifest c = random_manifest(gen, "c");

    const auto ca = to_counts(a), cb = to_counts(b);
    std::map<Uid, std::size_t> want_inter, want_union = ca;
    for (const auto& [u, n] : cb) {
      auto it = ca.find(u);
      if (it != ca.end()) want_inter[u] = std::min(it->second, n);
      want_union[u] = std::max(want_union[u], n);
    }
    CHECK(to_counts(intersect(a, b)) == want_inter);
    CHECK(to_counts(unite(a, b)) == want_union);

    CHECK(intersect(a, b).uids() == intersect(b, a).uids());
    CHECK(unite(a, b).uids() == unite(b, a).uids());
    CHECK(intersect(intersect(a, b), c).uids() == intersect(a, intersect(b, c)).uids());
    CHECK(unite(unite(a, b), c).uids() == unite(a, unite(b, c)).uids());
    CHECK(intersect(a, a).uids() == a.uids());
  }
}

TEST_CASE("composing manifests from different pools is a config error") {
  SubsetManifest a({fixture_uid(1)}, "pool-a", "s");
  SubsetManifest b({fixture_uid(1)}, "pool-b", "s");
  CHECK_THROWS_AS(intersect(a, b), ConfigError);
  CHECK_THROWS_AS(unite(a, b), ConfigError);
}
