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

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "curate/cluster.hpp"
#include "curate/filters.hpp"
#include "curate/manifest.hpp"
#include "curate/record.hpp"

namespace curate {

/// Per-record matched synset sets and global per-synset record counts.
/// Offsets are interned; `offsets` maps the interned id back to the offset
/// string.
struct SynsetIndex {
  std::vector<std::string> offsets;
  /// matched[i]: sorted unique interned offset ids for record i (set
  /// semantics; a word appearing twice counts once).
  std::vector<std::vector<std::int32_t>> matched;
  /// counts[j]: number of records whose caption matched offset j.
  std::vector<std::int64_t> counts;
};

SynsetIndex build_synset_index(const PoolView& pool, const SynsetLexicon& lexicon);

enum class SynsetWeightMode { average, max };

struct SamplingParams {
  double alpha = 1.0;  // temperature >= 0
  SynsetWeightMode mode = SynsetWeightMode::average;
  std::size_t target_size = 0;
  std::uint64_t seed = 0;
  std::size_t repeat_cap = 100;
};

/// Sampling weight for one record: (1/|T|) * sum over T of N^(alpha-1) in
/// average mode, max over T of N^(alpha-1) in max mode. Exposed so callers
/// (and tests) can evaluate the analytic distribution.
double synset_weight(const SynsetIndex& index, std::size_t record,
                     double alpha, SynsetWeightMode mode);

/// Temperature-weighted sampling with replacement over records with a
/// nonempty matched set. Draws that would push a uid past repeat_cap are
/// rejected and redrawn. Deterministic for a fixed seed; the draw loop is
/// sequential by design.
///
/// Throws ConfigError when target_size exceeds repeat_cap x (distinct uids
/// in the support) and DataError when the support is empty.
SubsetManifest text_sample(const PoolView& pool, const SynsetIndex& index,
                           const SamplingParams& params);

/// Cluster-temperature sampling: draws cluster i with probability
/// s_i^alpha / sum_j s_j^alpha (clusters with s_i = 0 are excluded; 0^0 = 0),
/// then a uniform member record of that cluster; with replacement, same
/// repeat-cap rejection. Empty selected clusters trigger a redraw.
SubsetManifest image_sample(const PoolView& pool, const std::string& family,
                            const ClusterModel& model,
                            const std::vector<std::int64_t>& reference_counts,
                            const SamplingParams& params, int workers = 1);

}  // namespace curate
