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
#include "curate/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "curate/parallel.hpp"
#include "curate/rng.hpp"

namespace curate {

namespace {

/// Euclidean counterpart of the spherical fit: min-distance assignment,
/// arithmetic-mean update, worst-point (largest distance) reseeding for
/// empty clusters, sequential accumulation in point order.
MatrixF euclidean_kmeans(const MatrixF& points, int k, int iterations,
                         std::uint64_t seed, std::vector<double>* mse_trace) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  if (k <= 0 || static_cast<Eigen::Index>(k) > n) {
    throw ConfigError("euclidean k-means: k=" + std::to_string(k) +
                      " must lie in [1, " + std::to_string(n) + "]");
  }

  SeededRng rng(seed);
  MatrixF centroids(k, dim);
  for (std::size_t c = 0;
       const std::size_t row : rng.sample_distinct(static_cast<std::size_t>(n),
                                                   static_cast<std::size_t>(k))) {
    centroids.row(static_cast<Eigen::Index>(c++)) =
        points.row(static_cast<Eigen::Index>(row));
  }

  std::vector<int> assignment(n);
  std::vector<double> point_d2(n);
  RowMatrix<double> sums(k, dim);
  std::vector<std::int64_t> counts(k);

  for (int it = 0; it < iterations; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const float* row = points.data() + i * dim;
      int best = 0;
      double best_d2 = sqdist_accum(centroids.data(), row, dim);
      for (int c = 1; c < k; ++c) {
        const double d2 = sqdist_accum(centroids.data() + Eigen::Index(c) * dim, row, dim);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      assignment[i] = best;
      point_d2[i] = best_d2;
    }

    if (mse_trace != nullptr) {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) sum += point_d2[i];
      mse_trace->push_back(sum / static_cast<double>(n));
    }

    sums.setZero();
    std::fill(counts.begin(), counts.end(), std::int64_t{0});
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = assignment[i];
      const float* row = points.data() + i * dim;
      double* acc = sums.data() + Eigen::Index(c) * dim;
      for (Eigen::Index j = 0; j < dim; ++j) acc[j] += row[j];
      counts[c] += 1;
    }

    std::vector<int> empties;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        empties.push_back(c);
        continue;
      }
      const double inv = 1.0 / static_cast<double>(counts[c]);
      const double* acc = sums.data() + Eigen::Index(c) * dim;
      float* out = centroids.data() + Eigen::Index(c) * dim;
      for (Eigen::Index j = 0; j < dim; ++j) out[j] = static_cast<float>(acc[j] * inv);
    }

    if (!empties.empty()) {
      std::vector<Eigen::Index> order(n);
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (point_d2[a] != point_d2[b]) return point_d2[a] > point_d2[b];
        return a < b;
      });
      std::size_t next = 0;
      for (int c : empties) {
        if (next >= order.size()) break;
        centroids.row(c) = points.row(order[next]);
        ++next;
      }
    }
  }
  return centroids;
}

}  // namespace

std::vector<std::uint16_t> Quantizer::encode(const float* x) const {
  std::vector<std::uint16_t> code(subspaces);
  const Eigen::Index sd = sub_dim();
  for (int s = 0; s < subspaces; ++s) {
    const MatrixF& book = codebooks[s];
    const float* xs = x + Eigen::Index(s) * sd;
    int best = 0;
    double best_d2 = sqdist_accum(book.data(), xs, sd);
    for (int c = 1; c < book.rows(); ++c) {
      const double d2 = sqdist_accum(book.data() + Eigen::Index(c) * sd, xs, sd);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    code[s] = static_cast<std::uint16_t>(best);
  }
  return code;
}

std::vector<float> Quantizer::reconstruct(const std::vector<std::uint16_t>& code) const {
  std::vector<float> out(dim);
  const Eigen::Index sd = sub_dim();
  for (int s = 0; s < subspaces; ++s) {
    const float* word = codebooks[s].data() + Eigen::Index(code[s]) * sd;
    std::copy(word, word + sd, out.begin() + Eigen::Index(s) * sd);
  }
  return out;
}

Quantizer train_quantizer(const EmbeddingTable& points, int m, int bits,
                          std::uint64_t seed, int iterations,
                          std::vector<double>* reconstruction_trace) {
  if (m <= 0 || points.dim() % m != 0) {
    throw ConfigError("subspace count " + std::to_string(m) +
                      " must divide embedding dim " + std::to_string(points.dim()));
  }
  if (bits < 0 || bits > 16) throw ConfigError("bits per code must lie in [0,16]");
  const int k = 1 << bits;
  if (static_cast<Eigen::Index>(k) > points.count()) {
    throw ConfigError("2^bits = " + std::to_string(k) + " exceeds point count " +
                      std::to_string(points.count()));
  }

  Quantizer q;
  q.dim = points.dim();
  q.subspaces = m;
  q.bits = bits;
  q.codebooks.reserve(m);

  SeededRng seeds(seed);
  const Eigen::Index sd = q.sub_dim();
  for (int s = 0; s < m; ++s) {
    MatrixF sub = points.rows.middleCols(Eigen::Index(s) * sd, sd);
    std::vector<double>* trace =
        (s == m - 1) ? reconstruction_trace : nullptr;  // report the last subspace
    q.codebooks.push_back(euclidean_kmeans(sub, k, iterations, seeds.next(), trace));
  }
  return q;
}

double adc_distance(const Quantizer& q, const float* x,
                    const std::vector<std::uint16_t>& y_code) {
  if (static_cast<int>(y_code.size()) != q.subspaces) {
    throw DataError("code length " + std::to_string(y_code.size()) +
                    " does not match quantizer subspaces " + std::to_string(q.subspaces));
  }
  const Eigen::Index sd = q.sub_dim();
  double sum = 0.0;
  for (int s = 0; s < q.subspaces; ++s) {
    const float* word = q.codebooks[s].data() + Eigen::Index(y_code[s]) * sd;
    sum += sqdist_accum(x + Eigen::Index(s) * sd, word, sd);
  }
  return std::sqrt(sum);
}

std::vector<bool> flag_eval_duplicates(const EmbeddingTable& pool_descriptors,
                                       const EmbeddingTable& eval_descriptors,
                                       double eval_threshold, int workers) {
  if (pool_descriptors.dim() != eval_descriptors.dim()) {
    throw DataError("pool descriptor dim " + std::to_string(pool_descriptors.dim()) +
                    " does not match eval descriptor dim " +
                    std::to_string(eval_descriptors.dim()));
  }
  const std::size_t n = pool_descriptors.count();
  const Eigen::Index m = eval_descriptors.count();
  const Eigen::Index dim = pool_descriptors.dim();
  std::vector<bool> flags(n, false);
  parallel_chunks(n, workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      const float* row = pool_descriptors.row(static_cast<Eigen::Index>(i));
      for (Eigen::Index r = 0; r < m; ++r) {
        if (dot_accum(eval_descriptors.row(r), row, dim) >= eval_threshold) {
          flags[i] = true;
          break;
        }
      }
    }
  });
  return flags;
}

void write_flag_list(const PoolView& pool, const std::vector<bool>& flags,
                     const std::filesystem::path& path) {
  if (flags.size() != pool.row_count()) {
    throw DataError("flag list size does not match pool row count");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write flag list: " + path.string());
  for (std::size_t i = 0; i < flags.size(); ++i) {
    out << pool.records[i].uid.hex() << '\t' << (flags[i] ? '1' : '0') << '\n';
  }
}

SubsetManifest self_dedup(const PoolView& pool, const std::string& family,
                          const DedupParams& params, const Quantizer& quantizer,
                          int workers) {
  if (!(params.t_adc > 0.0 && params.t_adc < 1.0)) {
    throw ConfigError("t_adc must lie in (0,1)");
  }
  if (params.knn < 1) throw ConfigError("knn must be >= 1");
  const EmbeddingTable& table = pool.embedding(family);
  if (table.dim() != quantizer.dim) {
    throw ConfigError("embedding family '" + family + "' has dim " +
                      std::to_string(table.dim()) + " but quantizer expects " +
                      std::to_string(quantizer.dim));
  }

  const std::size_t n = pool.row_count();
  std::vector<std::vector<std::uint16_t>> codes(n);
  parallel_chunks(n, workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      codes[i] = quantizer.encode(table.row(static_cast<Eigen::Index>(i)));
    }
  });

  const Eigen::Index sd = quantizer.sub_dim();
  const int words = quantizer.codewords();
  std::vector<char> kept(n, 1);

  parallel_chunks(n, workers, [&](std::size_t b, std::size_t e, std::size_t) {
    // Per-subspace lookup tables for the current query x: distance to every
    // codeword. Table sums reproduce adc_distance exactly (same per-subspace
    // partials added in the same order).
    std::vector<double> table_x(static_cast<std::size_t>(quantizer.subspaces) * words);
    std::vector<std::pair<double, std::size_t>> neighbor;
    for (std::size_t x = b; x < e; ++x) {
      const float* xv = table.row(static_cast<Eigen::Index>(x));
      for (int s = 0; s < quantizer.subspaces; ++s) {
        const MatrixF& book = quantizer.codebooks[s];
        for (int c = 0; c < words; ++c) {
          table_x[static_cast<std::size_t>(s) * words + c] =
              sqdist_accum(xv + Eigen::Index(s) * sd, book.data() + Eigen::Index(c) * sd, sd);
        }
      }
      auto adc = [&](const std::vector<std::uint16_t>& code) {
        double sum = 0.0;
        for (int s = 0; s < quantizer.subspaces; ++s) {
          sum += table_x[static_cast<std::size_t>(s) * words + code[s]];
        }
        return std::sqrt(sum);
      };

      const double d_self = adc(codes[x]);

      neighbor.clear();
      neighbor.reserve(n - 1);
      for (std::size_t y = 0; y < n; ++y) {
        if (y == x) continue;
        neighbor.emplace_back(adc(codes[y]), y);
      }
      if (neighbor.size() > params.knn) {
        std::nth_element(neighbor.begin(), neighbor.begin() + params.knn - 1,
                         neighbor.end());
        neighbor.resize(params.knn);
      }

      const SampleRecord& rx = pool.records[x];
      for (const auto& [d_xy, y] : neighbor) {
        const bool duplicate =
            d_self == 0.0 ? d_xy == 0.0
                          : std::abs(d_self - d_xy) / d_self < params.t_adc;
        if (!duplicate) continue;
        const SampleRecord& ry = pool.records[y];
        if (ry.clip_l14_similarity_score > rx.clip_l14_similarity_score ||
            (ry.clip_l14_similarity_score == rx.clip_l14_similarity_score &&
             ry.uid < rx.uid)) {
          kept[x] = 0;
          break;
        }
      }
    }
  });

  std::vector<Uid> uids;
  for (std::size_t i = 0; i < n; ++i) {
    if (kept[i]) uids.push_back(pool.records[i].uid);
  }
  return SubsetManifest(std::move(uids), pool.pool_id,
                        "self_dedup(" + family + ",t_adc=" + std::to_string(params.t_adc) + ")");
}

}  // namespace curate
