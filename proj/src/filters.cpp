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
#include "curate/filters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace curate {

bool caption_length_pass(const SampleRecord& record, int min_words, int min_chars) {
  return word_count(record.text) >= static_cast<std::size_t>(min_words) &&
         utf8_length(record.text) >= static_cast<std::size_t>(min_chars);
}

bool image_size_pass(const SampleRecord& record, int min_dim, double max_aspect) {
  const int lo = std::min(record.original_width, record.original_height);
  const int hi = std::max(record.original_width, record.original_height);
  return lo > min_dim &&
         static_cast<double>(hi) / static_cast<double>(lo) < max_aspect;
}

bool english_pass(const SampleRecord& record, const LanguageDetector& detector) {
  return detector.is_english(record.text);
}

bool safety_pass(const SampleRecord& record, double image_threshold,
                 double text_threshold) {
  if (record.nsfw_image_score && !(*record.nsfw_image_score < image_threshold)) {
    return false;
  }
  if (record.nsfw_text_scores) {
    for (double s : *record.nsfw_text_scores) {
      if (!(s < text_threshold)) return false;
    }
  }
  return true;
}

double similarity_score(const SampleRecord& record, const std::string& family) {
  if (family == "clip_b32" || family == "clip_b32_similarity_score") {
    return record.clip_b32_similarity_score;
  }
  if (family == "clip_l14" || family == "clip_l14_similarity_score") {
    return record.clip_l14_similarity_score;
  }
  throw ConfigError("unknown similarity-score family '" + family + "'");
}

namespace {

/// floor with a nudge so that fractions that are exact in real arithmetic
/// (0.3 * 12800 = 3840) do not truncate one short after binary rounding.
std::size_t floor_fraction(double fraction, std::size_t n) {
  return static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) + 1e-9));
}

struct ScoredUid {
  double score;
  Uid uid;
};

/// Pool order -> descending score, ties by ascending uid. The global sort is
/// a pure function of the (score, uid) multiset, so any pool permutation and
/// any worker partitioning yields the same ranking.
std::vector<ScoredUid> ranked_by_score(const PoolView& pool, const std::string& family) {
  std::vector<ScoredUid> ranked;
  ranked.reserve(pool.row_count());
  for (const SampleRecord& r : pool.records) {
    ranked.push_back(ScoredUid{similarity_score(r, family), r.uid});
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoredUid& a, const ScoredUid& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.uid < b.uid;
  });
  return ranked;
}

}  // namespace

SubsetManifest clip_threshold_filter(const PoolView& pool, const std::string& family,
                                     double threshold) {
  std::vector<Uid> kept;
  for (const SampleRecord& r : pool.records) {
    if (similarity_score(r, family) > threshold) kept.push_back(r.uid);
  }
  return SubsetManifest(std::move(kept), pool.pool_id,
                        "clip_threshold(" + family + "," + std::to_string(threshold) + ")");
}

SubsetManifest clip_top_fraction_filter(const PoolView& pool, const std::string& family,
                                        double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("fraction must lie in (0,1], got " + std::to_string(fraction));
  }
  auto ranked = ranked_by_score(pool, family);
  const std::size_t n = floor_fraction(fraction, ranked.size());
  std::vector<Uid> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i) kept.push_back(ranked[i].uid);
  return SubsetManifest(std::move(kept), pool.pool_id,
                        "clip_top_fraction(" + family + "," + std::to_string(fraction) + ")");
}

SubsetManifest clip_fraction_range_filter(const PoolView& pool, const std::string& family,
                                          double lo, double hi) {
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) {
    throw ConfigError("fraction range must satisfy 0 <= lo < hi <= 1");
  }
  auto ranked = ranked_by_score(pool, family);
  const std::size_t a = floor_fraction(lo, ranked.size());
  const std::size_t b = floor_fraction(hi, ranked.size());
  std::vector<Uid> kept;
  kept.reserve(b - a);
  for (std::size_t i = a; i < b; ++i) kept.push_back(ranked[i].uid);
  return SubsetManifest(std::move(kept), pool.pool_id,
                        "clip_fraction_range(" + family + "," + std::to_string(lo) + "," +
                            std::to_string(hi) + ")");
}

SubsetManifest predicate_filter(const PoolView& pool,
                                const std::function<bool(const SampleRecord&)>& pred,
                                const std::string& label) {
  std::vector<Uid> kept;
  for (const SampleRecord& r : pool.records) {
    if (pred(r)) kept.push_back(r.uid);
  }
  return SubsetManifest(std::move(kept), pool.pool_id, label);
}

const std::unordered_set<std::string>& SynsetLexicon::member_set(
    const std::string& name) const {
  auto it = membership.find(name);
  if (it == membership.end()) {
    throw ConfigError("lexicon has no membership set '" + name + "'");
  }
  return it->second;
}

void load_lexicon_words(SynsetLexicon& lexicon, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw FormatError("lexicon line " + std::to_string(line_no) +
                        " is not `word<TAB>offset`");
    }
    lexicon.word_to_offset[line.substr(0, tab)] = line.substr(tab + 1);
  }
}

void load_membership_set(SynsetLexicon& lexicon, const std::string& set_name,
                         const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open membership set: " + path.string());
  auto& set = lexicon.membership[set_name];
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) set.insert(line);
  }
}

SubsetManifest synset_text_filter(const PoolView& pool, const SynsetLexicon& lexicon,
                                  const std::string& set_name,
                                  const LanguageDetector& detector) {
  const auto& members = lexicon.member_set(set_name);
  std::vector<Uid> kept;
  for (const SampleRecord& r : pool.records) {
    if (!detector.is_english(r.text)) continue;
    bool hit = false;
    for (const std::string& token : tokenize_caption(r.text)) {
      auto it = lexicon.word_to_offset.find(token);
      if (it != lexicon.word_to_offset.end() && members.count(it->second) > 0) {
        hit = true;
        break;
      }
    }
    if (hit) kept.push_back(r.uid);
  }
  return SubsetManifest(std::move(kept), pool.pool_id,
                        "synset_text(" + set_name + ")");
}

}  // namespace curate
