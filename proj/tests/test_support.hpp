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

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "curate/embedding.hpp"
#include "curate/record.hpp"

namespace curate::test {

/// Unique temp directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("curate-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Deterministic uid for fixtures: index spread across the 128-bit space.
inline Uid fixture_uid(std::uint64_t i) {
  Uid::Bytes b{};
  for (int k = 0; k < 8; ++k) {
    b[8 + k] = static_cast<std::uint8_t>((i >> (8 * (7 - k))) & 0xff);
  }
  // Mix the low byte into the top so fixture order is not uid order.
  b[0] = static_cast<std::uint8_t>((i * 0x9e3779b9u) >> 24);
  return Uid(b);
}

inline SampleRecord fixture_record(std::uint64_t i, double b32 = 0.0, double l14 = 0.0) {
  SampleRecord r;
  r.uid = fixture_uid(i);
  r.url = "http://example.test/" + std::to_string(i);
  r.text = "the sample number " + std::to_string(i);
  r.original_width = 640;
  r.original_height = 480;
  r.clip_b32_similarity_score = b32;
  r.clip_l14_similarity_score = l14;
  return r;
}

/// Random unit rows (test-local generator, independent of library RNG use).
inline MatrixF random_unit_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixF rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    std::vector<double> v(dim);
    do {
      sq = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        v[j] = normal(gen);
        sq += v[j] * v[j];
      }
    } while (sq == 0.0);
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < dim; ++j) {
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<float>(v[j] * inv);
    }
  }
  return rows;
}

/// Upper-tail chi-square critical values at p = 0.001 for dof 1..10.
inline double chi2_crit_p001(int dof) {
  static const double kCrit[] = {10.828, 13.816, 16.266, 18.467, 20.515,
                                 22.458, 24.322, 26.124, 27.877, 29.588};
  return kCrit[dof - 1];
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace curate::test
