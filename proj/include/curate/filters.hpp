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
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "curate/manifest.hpp"
#include "curate/record.hpp"
#include "curate/text.hpp"

namespace curate {

// ---------------------------------------------------------------------------
// Per-record predicates. All comparisons are strict: a score exactly on a
// threshold falls on the reject side, for keep-filters and safety alike.
// ---------------------------------------------------------------------------

/// Keep iff word count >= min_words and Unicode scalar count (whitespace
/// included) >= min_chars.
bool caption_length_pass(const SampleRecord& record, int min_words = 2,
                         int min_chars = 6);

/// Keep iff min(w,h) > min_dim and max(w,h)/min(w,h) < max_aspect.
bool image_size_pass(const SampleRecord& record, int min_dim = 200,
                     double max_aspect = 3.0);

bool english_pass(const SampleRecord& record, const LanguageDetector& detector);

/// Keep iff nsfw_image_score < image_threshold and all seven text category
/// scores < text_threshold. Records lacking scores pass (callers record a
/// provenance note).
bool safety_pass(const SampleRecord& record, double image_threshold = 0.1,
                 double text_threshold = 0.1);

// ---------------------------------------------------------------------------
// Pool-level score selections. `family` is "clip_b32" or "clip_l14" and
// resolves to the corresponding similarity score on each record.
// ---------------------------------------------------------------------------

/// Resolves a similarity-score family name; throws ConfigError when unknown.
double similarity_score(const SampleRecord& record, const std::string& family);

/// Keeps records with score strictly above `threshold`.
SubsetManifest clip_threshold_filter(const PoolView& pool, const std::string& family,
                                     double threshold);

/// Keeps the floor(fraction*N) highest-scoring records; ties broken by
/// ascending uid. fraction in (0, 1].
SubsetManifest clip_top_fraction_filter(const PoolView& pool, const std::string& family,
                                        double fraction);

/// Keeps records ranked in positions (floor(lo*N), floor(hi*N)] of the
/// descending score order, same tie rule. 0 <= lo < hi <= 1.
SubsetManifest clip_fraction_range_filter(const PoolView& pool, const std::string& family,
                                          double lo, double hi);

/// Keeps records passing `pred`; the generic carrier for predicate presets.
SubsetManifest predicate_filter(const PoolView& pool,
                                const std::function<bool(const SampleRecord&)>& pred,
                                const std::string& label);

// ---------------------------------------------------------------------------
// Synset lexicon and text-based filtering.
// ---------------------------------------------------------------------------

/// Word -> single synset offset map ("most likely lemma" resolution is
/// precomputed by the lexicon supplier) plus named membership sets of
/// offsets ("in1k", "in21k").
struct SynsetLexicon {
  std::unordered_map<std::string, std::string> word_to_offset;
  std::unordered_map<std::string, std::unordered_set<std::string>> membership;

  const std::unordered_set<std::string>& member_set(const std::string& name) const;
};

/// Lexicon file: UTF-8 lines `word<TAB>offset`.
void load_lexicon_words(SynsetLexicon& lexicon, const std::filesystem::path& path);

/// Membership set file: one offset per line.
void load_membership_set(SynsetLexicon& lexicon, const std::string& set_name,
                         const std::filesystem::path& path);

/// Keeps records whose caption is English (per `detector`) and has at least
/// one token mapping through the lexicon to an offset in the named set.
SubsetManifest synset_text_filter(const PoolView& pool, const SynsetLexicon& lexicon,
                                  const std::string& set_name,
                                  const LanguageDetector& detector);

}  // namespace curate
