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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace curate {

/// Number of Unicode scalar values in a UTF-8 string (continuation bytes are
/// not counted). Whitespace is included; this is the caption-length
/// character count.
std::size_t utf8_length(std::string_view s);

/// Number of maximal non-whitespace runs (whitespace = ASCII space, \t, \n,
/// \v, \f, \r).
std::size_t word_count(std::string_view s);

/// Caption tokenization shared by the synset filter and the synset index:
/// ASCII-lowercase, replace ASCII punctuation with spaces, split on
/// whitespace.
std::vector<std::string> tokenize_caption(std::string_view caption);

/// Caption language classifier interface. The detector identity is recorded
/// in run provenance so manifests remain attributable.
class LanguageDetector {
 public:
  virtual ~LanguageDetector() = default;
  virtual bool is_english(std::string_view caption) const = 0;
  virtual std::string name() const = 0;
};

/// Baseline shipped heuristic: at least 90% of the caption's Unicode scalar
/// values fall in the Basic Latin block and at least one token hits a
/// 100-word English stopword list. Not a fasttext replacement; callers may
/// plug in a stronger detector.
class HeuristicEnglishDetector final : public LanguageDetector {
 public:
  bool is_english(std::string_view caption) const override;
  std::string name() const override { return "heuristic-latin-stopword-v1"; }
};

}  // namespace curate
