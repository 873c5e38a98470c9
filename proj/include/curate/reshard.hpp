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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "curate/manifest.hpp"

#include "json.hpp"

namespace curate {

/// One pool sample as stored in a shard: consecutive entries `<key>.jpg`,
/// `<key>.txt`, `<key>.json` sharing the key prefix. The key is the uid hex,
/// optionally suffixed `-<k>` for the k-th duplicate copy (k >= 1).
struct ShardSample {
  std::string key;
  std::string jpg;
  std::string txt;
  std::string json;
};

struct ReshardReport {
  std::size_t shards_read = 0;
  std::size_t samples_scanned = 0;
  std::size_t samples_written = 0;
  std::vector<Uid> missing_uids;
  std::size_t bytes_written = 0;
  std::vector<std::string> shard_errors;

  nlohmann::ordered_json to_json() const;
};

using ProgressFn = std::function<void(std::size_t scanned, std::size_t total)>;

/// Shard files `shard-%08d.tar` in `dir`, in name order.
std::vector<std::filesystem::path> list_shards(const std::filesystem::path& dir);

/// Materializes the manifest-selected subset in one pass over the input
/// shards: every input shard is opened and scanned exactly once; a sample
/// whose uid has multiplicity k in the manifest is written k times with
/// payload bytes copied verbatim; output shards are filled to
/// samples_per_shard in scan order with duplicates adjacent. Manifest uids
/// absent from the pool are listed in missing_uids. Corrupt shards are
/// reported in shard_errors and the scan continues.
///
/// Throws ConfigError when output_dir exists and is not empty.
ReshardReport reshard(const std::filesystem::path& input_dir,
                      const SubsetManifest& manifest,
                      const std::filesystem::path& output_dir,
                      std::size_t samples_per_shard = 1000,
                      const ProgressFn& progress = {});

/// Contiguous, disjoint shard-index ranges covering [0, shard_count),
/// sizes balanced to within one. Ranges may be empty when workers exceed
/// the shard count.
std::vector<std::pair<std::size_t, std::size_t>> plan_partitions(
    std::size_t shard_count, int workers);

/// Reshards only input shards [begin_shard, end_shard); used by partitioned
/// runs. missing_uids lists manifest uids not found in the range.
ReshardReport reshard_range(const std::filesystem::path& input_dir,
                            const SubsetManifest& manifest,
                            const std::filesystem::path& output_dir,
                            std::size_t begin_shard, std::size_t end_shard,
                            std::size_t samples_per_shard = 1000,
                            const ProgressFn& progress = {});

/// Partitioned reshard: workers own disjoint contiguous shard ranges and
/// write independent ShardSets; the merge step re-chunks the concatenated
/// sample stream (in range order), so the final output is byte-identical to
/// a single-worker run. Reports are combined (missing = found by no worker).
ReshardReport reshard_parallel(const std::filesystem::path& input_dir,
                               const SubsetManifest& manifest,
                               const std::filesystem::path& output_dir,
                               std::size_t samples_per_shard, int workers,
                               const ProgressFn& progress = {});

struct VerifyDiff {
  std::vector<std::string> problems;  // human-readable, uid-labelled
  bool ok() const { return problems.empty(); }
};

/// True iff the output's base-uid multiset equals the manifest minus
/// `missing` (with multiplicities) and every sample's three entries are
/// present and adjacent. Never throws on content mismatch; the diff report
/// names offending uids.
bool verify_shards(const std::filesystem::path& output_dir,
                   const SubsetManifest& manifest,
                   const std::vector<Uid>& missing = {},
                   VerifyDiff* diff = nullptr);

}  // namespace curate
