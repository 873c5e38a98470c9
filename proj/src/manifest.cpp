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
#include "curate/manifest.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "curate/error.hpp"

namespace curate {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'M', 'F'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

SubsetManifest::SubsetManifest(std::vector<Uid> uids, std::string source_pool_id,
                               std::string strategy_label,
                               std::optional<std::size_t> repeat_cap)
    : uids_(std::move(uids)),
      source_pool_id_(std::move(source_pool_id)),
      strategy_label_(std::move(strategy_label)) {
  std::sort(uids_.begin(), uids_.end());
  if (repeat_cap) {
    std::size_t run = 0;
    for (std::size_t i = 0; i < uids_.size(); ++i) {
      run = (i > 0 && uids_[i] == uids_[i - 1]) ? run + 1 : 1;
      if (run > *repeat_cap) {
        throw ValidationError("uid " + uids_[i].hex() +
                              " exceeds repeat cap " + std::to_string(*repeat_cap));
      }
    }
  }
}

std::size_t SubsetManifest::multiplicity(const Uid& u) const {
  auto [lo, hi] = std::equal_range(uids_.begin(), uids_.end(), u);
  return static_cast<std::size_t>(hi - lo);
}

std::vector<Uid> SubsetManifest::distinct() const {
  std::vector<Uid> out;
  for (std::size_t i = 0; i < uids_.size(); ++i) {
    if (i == 0 || !(uids_[i] == uids_[i - 1])) out.push_back(uids_[i]);
  }
  return out;
}

namespace {

void check_same_pool(const SubsetManifest& a, const SubsetManifest& b) {
  if (a.source_pool_id() != b.source_pool_id()) {
    throw ConfigError("cannot compose manifests from different pools: '" +
                      a.source_pool_id() + "' vs '" + b.source_pool_id() + "'");
  }
}

}  // namespace

SubsetManifest intersect(const SubsetManifest& a, const SubsetManifest& b) {
  check_same_pool(a, b);
  const auto& av = a.uids();
  const auto& bv = b.uids();
  std::vector<Uid> out;
  std::size_t i = 0, j = 0;
  while (i < av.size() && j < bv.size()) {
    if (av[i] < bv[j]) {
      ++i;
    } else if (bv[j] < av[i]) {
      ++j;
    } else {
      out.push_back(av[i]);  // min multiplicity: consume one of each
      ++i;
      ++j;
    }
  }
  return SubsetManifest(std::move(out), a.source_pool_id(),
                        a.strategy_label() + " \xE2\x88\xA9 " + b.strategy_label());
}

SubsetManifest unite(const SubsetManifest& a, const SubsetManifest& b) {
  check_same_pool(a, b);
  const auto& av = a.uids();
  const auto& bv = b.uids();
  std::vector<Uid> out;
  std::size_t i = 0, j = 0;
  while (i < av.size() || j < bv.size()) {
    if (j == bv.size() || (i < av.size() && av[i] < bv[j])) {
      out.push_back(av[i++]);
    } else if (i == av.size() || bv[j] < av[i]) {
      out.push_back(bv[j++]);
    } else {  // equal: max multiplicity, consume both sides once
      out.push_back(av[i]);
      ++i;
      ++j;
    }
  }
  return SubsetManifest(std::move(out), a.source_pool_id(),
                        a.strategy_label() + " \xE2\x88\xAA " + b.strategy_label());
}

void write_manifest(const SubsetManifest& manifest,
                    const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(24 + 16 * manifest.size());
  buf.append(kMagic, 4);
  put_u32le(buf, kFormatVersion);
  put_u64le(buf, manifest.size());
  buf.append(8, '\0');
  for (const Uid& u : manifest.uids()) {
    buf.append(reinterpret_cast<const char*>(u.bytes().data()), 16);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open manifest for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("manifest write failed: " + path.string());
}

SubsetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path.string());

  unsigned char header[24];
  in.read(reinterpret_cast<char*>(header), 24);
  if (in.gcount() != 24) throw FormatError("manifest header truncated: " + path.string());
  if (std::memcmp(header, kMagic, 4) != 0) {
    throw FormatError("bad manifest magic in " + path.string());
  }
  const std::uint32_t version = get_u32le(header + 4);
  if (version != kFormatVersion) {
    throw FormatError("unsupported manifest version " + std::to_string(version));
  }
  const std::uint64_t count = get_u64le(header + 8);

  std::vector<Uid> uids;
  uids.reserve(count);
  Uid::Bytes bytes;
  for (std::uint64_t k = 0; k < count; ++k) {
    in.read(reinterpret_cast<char*>(bytes.data()), 16);
    if (in.gcount() != 16) {
      throw FormatError("manifest payload truncated at entry " + std::to_string(k));
    }
    Uid u(bytes);
    if (!uids.empty() && u < uids.back()) {
      throw ValidationError("manifest payload not sorted at entry " + std::to_string(k));
    }
    uids.push_back(u);
  }
  // Constructor re-sorts (a no-op here) and applies no cap for read manifests.
  SubsetManifest m(std::move(uids), "", "");
  return m;
}

}  // namespace curate
