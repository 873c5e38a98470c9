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
#include <vector>

#include "curate/embedding.hpp"
#include "curate/manifest.hpp"
#include "curate/record.hpp"

namespace curate {

struct DedupParams {
  /// Cosine-similarity threshold for evaluation-set near-duplicates.
  double eval_threshold = 0.604169;
  /// Relative-difference threshold of the quantized-distance criterion.
  double t_adc = 0.1;
  /// Neighbor count searched per record; >= pool size makes the scan
  /// exhaustive.
  std::size_t knn = 1000;
};

/// Product quantizer: `m` subspaces of dim/m components, one codebook of
/// 2^bits codewords per subspace, trained with Euclidean k-means.
struct Quantizer {
  Eigen::Index dim = 0;
  int subspaces = 0;
  int bits = 0;
  /// codebooks[s]: (2^bits) x (dim/m) codeword matrix for subspace s.
  std::vector<MatrixF> codebooks;

  Eigen::Index sub_dim() const { return dim / subspaces; }
  int codewords() const { return 1 << bits; }

  /// Nearest codeword per subspace (min Euclidean distance, ties to the
  /// smallest index).
  std::vector<std::uint16_t> encode(const float* x) const;
  /// Concatenated codeword reconstruction of a code vector.
  std::vector<float> reconstruct(const std::vector<std::uint16_t>& code) const;
};

/// Trains per-subspace codebooks with the deterministic Euclidean k-means
/// routine (same init/update/reseed rules as the spherical fit, with
/// arithmetic means and distance-based assignment). `reconstruction_trace`,
/// when given, receives the per-iteration mean squared reconstruction error
/// of the last subspace trained, non-increasing across iterations.
Quantizer train_quantizer(const EmbeddingTable& points, int m, int bits,
                          std::uint64_t seed, int iterations = 20,
                          std::vector<double>* reconstruction_trace = nullptr);

/// Euclidean distance between full-precision x and the reconstruction of
/// y's codes. d_adc(x, encode(x)) is the record's own quantization distance.
double adc_distance(const Quantizer& q, const float* x,
                    const std::vector<std::uint16_t>& y_code);

/// Per-record flags: record j is flagged iff the maximum cosine similarity
/// against any eval row is >= eval_threshold. Exact blocked dense scan.
std::vector<bool> flag_eval_duplicates(const EmbeddingTable& pool_descriptors,
                                       const EmbeddingTable& eval_descriptors,
                                       double eval_threshold, int workers = 1);

/// Flag list file: one line per record, `uid<TAB>0|1`.
void write_flag_list(const PoolView& pool, const std::vector<bool>& flags,
                     const std::filesystem::path& path);

/// Removes within-pool near-duplicates: for each record x, candidates are
/// its knn nearest neighbors under ADC distance; y is a duplicate of x iff
/// |d(x,x) - d(x,y)| / d(x,x) < t_adc (when d(x,x) = 0: iff d(x,y) = 0).
/// A record is kept iff its clip_l14 score is >= that of every detected
/// duplicate, ties kept for the smaller uid. Returns the kept records.
SubsetManifest self_dedup(const PoolView& pool, const std::string& family,
                          const DedupParams& params, const Quantizer& quantizer,
                          int workers = 1);

}  // namespace curate
