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

#include <Eigen/Core>

#include <filesystem>
#include <string>

namespace curate {

template <class Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixF = RowMatrix<float>;

/// Inner product with sequential double accumulation. Every ranking decision
/// in the toolkit (cluster assignment, nearest-neighbor scans, duplicate
/// criteria) goes through this kernel or sqdist_accum, so results are a pure
/// function of the operand bytes, independent of SIMD width, worker count,
/// and compiler vectorization choices.
template <class Scalar>
inline double dot_accum(const Scalar* a, const Scalar* b, Eigen::Index n) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

/// Squared Euclidean distance, same accumulation contract as dot_accum.
template <class Scalar>
inline double sqdist_accum(const Scalar* a, const Scalar* b, Eigen::Index n) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

/// Row-aligned feature vectors for one pool slice; one table per feature
/// family ("clip_b32_image", "clip_l14_image", "dedup_descriptor", ...).
/// Rows are unit-normalized at load.
struct EmbeddingTable {
  std::string family;
  MatrixF rows;

  Eigen::Index count() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
  const float* row(Eigen::Index i) const { return rows.data() + i * rows.cols(); }
};

/// Renormalizes every row to unit L2 norm (computed in double).
/// Throws DataError on non-finite values or zero-norm rows.
void renormalize_rows(MatrixF& rows, const std::string& context);

/// Embedding sidecar format: magic "DCEM" (4), version u32 LE, dim u32 LE,
/// count u64 LE, family-name length u16 LE + UTF-8 name, then count x dim
/// 32-bit LE reals, row-major.
void write_embedding_table(const EmbeddingTable& table,
                           const std::filesystem::path& path);

/// Reads a sidecar. Rows are validated finite and renormalized to unit norm
/// when `renormalize` is set (the pool loader always sets it).
EmbeddingTable read_embedding_table(const std::filesystem::path& path,
                                    bool renormalize = true);

}  // namespace curate
