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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "curate/record.hpp"

#include "json.hpp"

namespace curate {

/// Record file: UTF-8, one JSON object per line, keys exactly
///   uid, url, text, original_width, original_height, sha256,
///   clip_b32_similarity_score, clip_l14_similarity_score, face_bboxes,
///   nsfw_image_score, nsfw_text_scores, dedup_score
/// Absent optional fields are omitted, never null.
///
/// Parsing proceeds in parallel over line-aligned chunks; the assembled
/// PoolView preserves file order regardless of worker count. Every declared
/// sidecar is loaded, row counts cross-checked, and rows renormalized.
PoolView read_pool(const std::filesystem::path& metadata_path,
                   const std::map<std::string, std::filesystem::path>& embedding_paths = {},
                   int workers = 1);

/// Emits the record file plus one sidecar per family (<family>.dcem inside
/// embedding_dir). Bit-exact per the formats above.
void write_pool(const PoolView& pool, const std::filesystem::path& metadata_path,
                const std::filesystem::path& embedding_dir);

nlohmann::ordered_json record_to_json(const SampleRecord& record);
SampleRecord record_from_json(const nlohmann::json& j, std::size_t line_no);

/// Fixed-width histogram with an optional overflow bucket. Bin counts
/// (including overflow) sum to the number of observations.
struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow = 0;
  /// Score histograms cover a closed range, so the exact top edge belongs to
  /// the last bin; open-topped histograms (aspect ratio) send it to overflow.
  bool closed_top = false;

  std::uint64_t total() const;
  void add(double value);
};

/// Integer-valued histogram: one bin per count up to a cap, then overflow.
struct CountHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow = 0;

  explicit CountHistogram(std::size_t max_bins = 256) : counts(max_bins, 0) {}
  std::uint64_t total() const;
  void add(std::size_t value);
};

struct PoolStats {
  std::uint64_t row_count = 0;
  /// Similarity-score histograms per feature family, bin width 0.01 on [-1,1].
  std::map<std::string, Histogram> score_histograms;
  /// Aspect ratio max(w,h)/min(w,h), bin width 0.1 from 1.0 up to 10.0,
  /// overflow above.
  Histogram aspect_ratio_histogram;
  CountHistogram caption_word_count_histogram;
  CountHistogram face_count_histogram;

  nlohmann::ordered_json to_json() const;
};

PoolStats compute_pool_stats(const PoolView& pool);

}  // namespace curate
