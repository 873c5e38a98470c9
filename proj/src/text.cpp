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
#include "curate/text.hpp"

#include <array>
#include <cctype>
#include <unordered_set>

namespace curate {

namespace {

inline bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

// Fry's first hundred sight words; a compact, fixed English stopword list.
const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kWords = {
      "the",   "of",    "and",   "a",     "to",    "in",    "is",    "you",
      "that",  "it",    "he",    "was",   "for",   "on",    "are",   "as",
      "with",  "his",   "they",  "i",     "at",    "be",    "this",  "have",
      "from",  "or",    "one",   "had",   "by",    "word",  "but",   "not",
      "what",  "all",   "were",  "we",    "when",  "your",  "can",   "said",
      "there", "use",   "an",    "each",  "which", "she",   "do",    "how",
      "their", "if",    "will",  "up",    "other", "about", "out",   "many",
      "then",  "them",  "these", "so",    "some",  "her",   "would", "make",
      "like",  "him",   "into",  "time",  "has",   "look",  "two",   "more",
      "write", "go",    "see",   "number","no",    "way",   "could", "people",
      "my",    "than",  "first", "water", "been",  "call",  "who",   "oil",
      "its",   "now",   "find",  "long",  "down",  "day",   "did",   "get",
      "come",  "made",  "may",   "part"};
  return kWords;
}

}  // namespace

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xc0) != 0x80) ++n;
  }
  return n;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    if (is_ascii_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<std::string> tokenize_caption(std::string_view caption) {
  std::string cleaned;
  cleaned.reserve(caption.size());
  for (unsigned char c : caption) {
    if (c < 0x80 && std::ispunct(c)) {
      cleaned.push_back(' ');
    } else if (c < 0x80) {
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    } else {
      cleaned.push_back(static_cast<char>(c));
    }
  }
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && is_ascii_space(cleaned[i])) ++i;
    std::size_t j = i;
    while (j < cleaned.size() && !is_ascii_space(cleaned[j])) ++j;
    if (j > i) tokens.emplace_back(cleaned.substr(i, j - i));
    i = j;
  }
  return tokens;
}

bool HeuristicEnglishDetector::is_english(std::string_view caption) const {
  std::size_t total = 0, latin = 0;
  for (unsigned char c : caption) {
    if ((c & 0xc0) == 0x80) continue;  // continuation byte
    ++total;
    if (c < 0x80) ++latin;
  }
  if (total == 0) return false;
  if (static_cast<double>(latin) < 0.9 * static_cast<double>(total)) return false;

  for (const std::string& token : tokenize_caption(caption)) {
    if (stopwords().count(token) > 0) return true;
  }
  return false;
}

}  // namespace curate
