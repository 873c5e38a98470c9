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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curate/embedding.hpp"
#include "curate/error.hpp"
#include "curate/uid.hpp"

namespace curate {

/// Normalized face bounding box; all coordinates in [0,1], x0 < x1, y0 < y1.
struct FaceBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

inline constexpr int kNsfwTextCategories = 7;

/// One pool entry of metadata. Optional fields are absent, never sentinel.
struct SampleRecord {
  Uid uid;
  std::string url;
  std::string text;
  int original_width = 1;
  int original_height = 1;
  std::optional<std::string> sha256;  // 64 lowercase hex chars when present
  double clip_b32_similarity_score = 0.0;
  double clip_l14_similarity_score = 0.0;
  std::vector<FaceBox> face_bboxes;
  std::optional<double> nsfw_image_score;
  std::optional<std::array<double, kNsfwTextCategories>> nsfw_text_scores;
  std::optional<double> dedup_score;
};

/// Throws ValidationError when a record violates a declared invariant.
void validate_record(const SampleRecord& record, std::size_t line_no);

/// A pool slice: records plus row-aligned embedding tables, immutable after
/// assembly. Every attached table has exactly row_count() rows.
struct PoolView {
  std::string pool_id;
  std::vector<SampleRecord> records;
  std::map<std::string, EmbeddingTable> embeddings;

  std::size_t row_count() const { return records.size(); }

  const EmbeddingTable& embedding(const std::string& family) const {
    auto it = embeddings.find(family);
    if (it == embeddings.end()) {
      throw ConfigError("pool has no embedding family '" + family + "'");
    }
    return it->second;
  }

  /// Verifies record/table row alignment; throws DataError on mismatch.
  void check_alignment() const {
    for (const auto& [family, table] : embeddings) {
      if (static_cast<std::size_t>(table.count()) != records.size()) {
        throw DataError("embedding family '" + family + "' has " +
                        std::to_string(table.count()) + " rows but pool has " +
                        std::to_string(records.size()) + " records");
      }
    }
  }
};

}  // namespace curate
