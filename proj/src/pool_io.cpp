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
#include "curate/pool_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "curate/parallel.hpp"
#include "curate/text.hpp"

namespace curate {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double require_number(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw DataError("record on line " + std::to_string(line_no) +
                    " is missing required key '" + key + "'");
  }
  return it->get<double>();
}

std::string require_string(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw DataError("record on line " + std::to_string(line_no) +
                    " is missing required key '" + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

void validate_record(const SampleRecord& r, std::size_t line_no) {
  auto fail = [line_no](const std::string& what) {
    throw ValidationError("record on line " + std::to_string(line_no) + ": " + what);
  };
  if (r.original_width < 1 || r.original_height < 1) fail("image dims must be >= 1");
  auto check_score = [&](double s, const char* name) {
    if (!(s >= -1.0 && s <= 1.0)) fail(std::string(name) + " outside [-1,1]");
  };
  check_score(r.clip_b32_similarity_score, "clip_b32_similarity_score");
  check_score(r.clip_l14_similarity_score, "clip_l14_similarity_score");
  for (const FaceBox& b : r.face_bboxes) {
    const bool in_range = b.x0 >= 0 && b.x1 <= 1 && b.y0 >= 0 && b.y1 <= 1;
    if (!in_range || !(b.x0 < b.x1) || !(b.y0 < b.y1)) fail("malformed face box");
  }
  if (r.nsfw_image_score && !(*r.nsfw_image_score >= 0 && *r.nsfw_image_score <= 1)) {
    fail("nsfw_image_score outside [0,1]");
  }
  if (r.nsfw_text_scores) {
    for (double s : *r.nsfw_text_scores) {
      if (!(s >= 0 && s <= 1)) fail("nsfw_text_scores entry outside [0,1]");
    }
  }
  if (r.sha256 && r.sha256->size() != 64) fail("sha256 must be 64 hex chars");
}

ordered_json record_to_json(const SampleRecord& r) {
  ordered_json j;
  j["uid"] = r.uid.hex();
  j["url"] = r.url;
  j["text"] = r.text;
  j["original_width"] = r.original_width;
  j["original_height"] = r.original_height;
  if (r.sha256) j["sha256"] = *r.sha256;
  j["clip_b32_similarity_score"] = r.clip_b32_similarity_score;
  j["clip_l14_similarity_score"] = r.clip_l14_similarity_score;
  ordered_json boxes = ordered_json::array();
  for (const FaceBox& b : r.face_bboxes) {
    boxes.push_back(ordered_json::array({b.x0, b.y0, b.x1, b.y1}));
  }
  j["face_bboxes"] = std::move(boxes);
  if (r.nsfw_image_score) j["nsfw_image_score"] = *r.nsfw_image_score;
  if (r.nsfw_text_scores) {
    j["nsfw_text_scores"] = *r.nsfw_text_scores;
  }
  if (r.dedup_score) j["dedup_score"] = *r.dedup_score;
  return j;
}

SampleRecord record_from_json(const json& j, std::size_t line_no) {
  if (!j.is_object()) {
    throw FormatError("line " + std::to_string(line_no) + " is not a JSON object");
  }
  SampleRecord r;
  r.uid = Uid::from_hex(require_string(j, "uid", line_no));
  r.url = require_string(j, "url", line_no);
  r.text = require_string(j, "text", line_no);
  r.original_width = static_cast<int>(require_number(j, "original_width", line_no));
  r.original_height = static_cast<int>(require_number(j, "original_height", line_no));
  if (auto it = j.find("sha256"); it != j.end()) r.sha256 = it->get<std::string>();
  r.clip_b32_similarity_score = require_number(j, "clip_b32_similarity_score", line_no);
  r.clip_l14_similarity_score = require_number(j, "clip_l14_similarity_score", line_no);

  auto boxes_it = j.find("face_bboxes");
  if (boxes_it == j.end() || !boxes_it->is_array()) {
    throw DataError("record on line " + std::to_string(line_no) +
                    " is missing required key 'face_bboxes'");
  }
  for (const auto& b : *boxes_it) {
    if (!b.is_array() || b.size() != 4) {
      throw FormatError("face box on line " + std::to_string(line_no) +
                        " must be [x0,y0,x1,y1]");
    }
    r.face_bboxes.push_back(FaceBox{b[0].get<double>(), b[1].get<double>(),
                                    b[2].get<double>(), b[3].get<double>()});
  }
  if (auto it = j.find("nsfw_image_score"); it != j.end()) {
    r.nsfw_image_score = it->get<double>();
  }
  if (auto it = j.find("nsfw_text_scores"); it != j.end()) {
    if (!it->is_array() || it->size() != kNsfwTextCategories) {
      throw FormatError("nsfw_text_scores on line " + std::to_string(line_no) +
                        " must hold exactly 7 values");
    }
    std::array<double, kNsfwTextCategories> scores{};
    for (int k = 0; k < kNsfwTextCategories; ++k) scores[k] = (*it)[k].get<double>();
    r.nsfw_text_scores = scores;
  }
  if (auto it = j.find("dedup_score"); it != j.end()) r.dedup_score = it->get<double>();

  validate_record(r, line_no);
  return r;
}

PoolView read_pool(const std::filesystem::path& metadata_path,
                   const std::map<std::string, std::filesystem::path>& embedding_paths,
                   int workers) {
  std::ifstream in(metadata_path, std::ios::binary);
  if (!in) throw IoError("cannot open pool metadata: " + metadata_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string content = std::move(buf).str();

  // Split into lines up front so chunk boundaries are line-aligned and the
  // chunk decomposition is independent of the worker count.
  std::vector<std::pair<std::size_t, std::size_t>> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    const std::size_t end = (nl == std::string::npos) ? content.size() : nl;
    if (end > pos) lines.emplace_back(pos, end);
    pos = (nl == std::string::npos) ? content.size() : nl + 1;
  }

  PoolView pool;
  pool.pool_id = metadata_path.stem().string();
  pool.records.resize(lines.size());
  parallel_chunks(lines.size(), workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      const auto [lb, le] = lines[i];
      json j;
      try {
        j = json::parse(content.begin() + lb, content.begin() + le);
      } catch (const json::parse_error& ex) {
        throw FormatError("bad JSON on line " + std::to_string(i + 1) + ": " + ex.what());
      }
      pool.records[i] = record_from_json(j, i + 1);
    }
  });

  for (const auto& [family, path] : embedding_paths) {
    EmbeddingTable table = read_embedding_table(path, /*renormalize=*/true);
    if (table.family.empty()) table.family = family;
    pool.embeddings[family] = std::move(table);
  }
  pool.check_alignment();
  return pool;
}

void write_pool(const PoolView& pool, const std::filesystem::path& metadata_path,
                const std::filesystem::path& embedding_dir) {
  std::ofstream out(metadata_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open pool metadata for writing: " + metadata_path.string());
  for (const SampleRecord& r : pool.records) {
    out << record_to_json(r).dump() << '\n';
  }
  if (!out) throw IoError("pool metadata write failed: " + metadata_path.string());

  if (!pool.embeddings.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(embedding_dir, ec);
    for (const auto& [family, table] : pool.embeddings) {
      write_embedding_table(table, embedding_dir / (family + ".dcem"));
    }
  }
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = overflow;
  for (auto c : counts) t += c;
  return t;
}

void Histogram::add(double value) {
  // The small nudge keeps values that are exact bin boundaries in real
  // arithmetic (0.30 -> bin [0.30,0.31)) from landing one bin low after
  // binary rounding.
  const double raw = (value - lo) / width + 1e-7;
  if (raw < 0) {
    counts.front() += 1;
    return;
  }
  auto idx = static_cast<std::size_t>(raw);
  if (closed_top && idx == counts.size()) idx = counts.size() - 1;
  if (idx >= counts.size()) {
    ++overflow;
  } else {
    counts[idx] += 1;
  }
}

std::uint64_t CountHistogram::total() const {
  std::uint64_t t = overflow;
  for (auto c : counts) t += c;
  return t;
}

void CountHistogram::add(std::size_t value) {
  if (value >= counts.size()) {
    ++overflow;
  } else {
    counts[value] += 1;
  }
}

namespace {

Histogram make_score_histogram() {
  Histogram h;
  h.lo = -1.0;
  h.width = 0.01;
  h.counts.assign(200, 0);
  h.closed_top = true;
  return h;
}

nlohmann::ordered_json histogram_json(const Histogram& h) {
  nlohmann::ordered_json j;
  j["lo"] = h.lo;
  j["width"] = h.width;
  j["counts"] = h.counts;
  j["overflow"] = h.overflow;
  return j;
}

nlohmann::ordered_json count_histogram_json(const CountHistogram& h) {
  nlohmann::ordered_json j;
  j["counts"] = h.counts;
  j["overflow"] = h.overflow;
  return j;
}

}  // namespace

PoolStats compute_pool_stats(const PoolView& pool) {
  PoolStats stats;
  stats.row_count = pool.row_count();
  stats.score_histograms["clip_b32_similarity_score"] = make_score_histogram();
  stats.score_histograms["clip_l14_similarity_score"] = make_score_histogram();
  stats.aspect_ratio_histogram.lo = 1.0;
  stats.aspect_ratio_histogram.width = 0.1;
  stats.aspect_ratio_histogram.counts.assign(90, 0);  // [1.0, 10.0), overflow above

  for (const SampleRecord& r : pool.records) {
    stats.score_histograms["clip_b32_similarity_score"].add(r.clip_b32_similarity_score);
    stats.score_histograms["clip_l14_similarity_score"].add(r.clip_l14_similarity_score);
    const double w = r.original_width, h = r.original_height;
    stats.aspect_ratio_histogram.add(std::max(w, h) / std::min(w, h));
    stats.caption_word_count_histogram.add(word_count(r.text));
    stats.face_count_histogram.add(r.face_bboxes.size());
  }
  return stats;
}

nlohmann::ordered_json PoolStats::to_json() const {
  nlohmann::ordered_json j;
  j["row_count"] = row_count;
  nlohmann::ordered_json scores;
  for (const auto& [family, h] : score_histograms) scores[family] = histogram_json(h);
  j["score_histograms"] = std::move(scores);
  j["aspect_ratio_histogram"] = histogram_json(aspect_ratio_histogram);
  j["caption_word_count_histogram"] = count_histogram_json(caption_word_count_histogram);
  j["face_count_histogram"] = count_histogram_json(face_count_histogram);
  return j;
}

}  // namespace curate
