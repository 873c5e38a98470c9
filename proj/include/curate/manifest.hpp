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
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "curate/uid.hpp"

namespace curate {

/// Ordered multiset of uids naming a curated subset. Always sorted ascending
/// by 128-bit value, so repeats are adjacent. Duplicate uids are allowed;
/// samplers cap the multiplicity of any single uid (default 100), filters do
/// not cap.
class SubsetManifest {
 public:
  SubsetManifest() = default;

  /// Sorts `uids` and enforces the repeat cap when one is given.
  /// Throws ValidationError if any uid multiplicity exceeds the cap.
  SubsetManifest(std::vector<Uid> uids, std::string source_pool_id,
                 std::string strategy_label,
                 std::optional<std::size_t> repeat_cap = std::nullopt);

  const std::vector<Uid>& uids() const { return uids_; }
  const std::string& source_pool_id() const { return source_pool_id_; }
  const std::string& strategy_label() const { return strategy_label_; }
  std::size_t size() const { return uids_.size(); }
  bool empty() const { return uids_.empty(); }

  /// Multiplicity of `u` in the manifest (binary search; uids are sorted).
  std::size_t multiplicity(const Uid& u) const;
  bool contains(const Uid& u) const { return multiplicity(u) > 0; }

  /// Distinct uids in ascending order.
  std::vector<Uid> distinct() const;

 private:
  std::vector<Uid> uids_;
  std::string source_pool_id_;
  std::string strategy_label_;
};

/// Multiset intersection: min multiplicity per uid. Throws ConfigError when
/// the manifests name different source pools.
SubsetManifest intersect(const SubsetManifest& a, const SubsetManifest& b);

/// Multiset union: max multiplicity per uid. Same pool check as intersect.
SubsetManifest unite(const SubsetManifest& a, const SubsetManifest& b);

/// Manifest file format: magic "DCMF" (4 bytes), format version u32
/// little-endian, count u64 little-endian, 8 reserved zero bytes, then
/// count x 16-byte big-endian uids sorted ascending.
void write_manifest(const SubsetManifest& manifest,
                    const std::filesystem::path& path);

/// Throws FormatError on a malformed header or truncated payload and
/// ValidationError when the payload is not sorted.
SubsetManifest read_manifest(const std::filesystem::path& path);

}  // namespace curate
