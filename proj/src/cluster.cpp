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
#include "curate/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "curate/parallel.hpp"
#include "curate/rng.hpp"

namespace curate {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'K', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

int argmax_inner_product(const MatrixF& centroids, const float* v, double* best_ip) {
  const Eigen::Index k = centroids.rows();
  const Eigen::Index dim = centroids.cols();
  int best = 0;
  double best_val = dot_accum(centroids.data(), v, dim);
  for (Eigen::Index i = 1; i < k; ++i) {
    const double ip = dot_accum(centroids.data() + i * dim, v, dim);
    if (ip > best_val) {  // ties keep the smallest index
      best_val = ip;
      best = static_cast<int>(i);
    }
  }
  if (best_ip != nullptr) *best_ip = best_val;
  return best;
}

}  // namespace

int assign_cluster(const ClusterModel& model, const float* v, Eigen::Index dim) {
  if (dim != model.dim()) {
    throw DataError("vector dim " + std::to_string(dim) +
                    " does not match model dim " + std::to_string(model.dim()));
  }
  return argmax_inner_product(model.centroids, v, nullptr);
}

std::vector<int> assign_all(const ClusterModel& model, const EmbeddingTable& points,
                            int workers) {
  if (points.dim() != model.dim()) {
    throw DataError("embedding dim " + std::to_string(points.dim()) +
                    " does not match model dim " + std::to_string(model.dim()));
  }
  std::vector<int> assignment(points.count());
  parallel_chunks(points.count(), workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      assignment[i] = argmax_inner_product(model.centroids, points.row(i), nullptr);
    }
  });
  return assignment;
}

ClusterModel kmeans_fit(const EmbeddingTable& points, int k, int iterations,
                        std::uint64_t seed, const KmeansOptions& options) {
  if (k <= 0) throw ConfigError("k must be positive");
  if (iterations <= 0) throw ConfigError("iterations must be positive");

  SeededRng rng(seed);

  // Optional seeded subsample, drawn first from the stream, kept in row order.
  MatrixF fit_rows;
  const MatrixF* data = &points.rows;
  if (options.fit_sample_size > 0 &&
      static_cast<std::size_t>(points.count()) > options.fit_sample_size) {
    auto picked = rng.sample_distinct(points.count(), options.fit_sample_size);
    std::sort(picked.begin(), picked.end());
    fit_rows.resize(static_cast<Eigen::Index>(picked.size()), points.dim());
    for (std::size_t i = 0; i < picked.size(); ++i) {
      fit_rows.row(static_cast<Eigen::Index>(i)) =
          points.rows.row(static_cast<Eigen::Index>(picked[i]));
    }
    data = &fit_rows;
  }

  const Eigen::Index n = data->rows();
  const Eigen::Index dim = data->cols();
  if (static_cast<Eigen::Index>(k) > n) {
    throw ConfigError("k=" + std::to_string(k) + " exceeds fit point count " +
                      std::to_string(n));
  }

  ClusterModel model;
  model.iterations = static_cast<std::uint32_t>(iterations);
  model.seed = seed;
  model.centroids.resize(k, dim);
  for (std::size_t c = 0;
       const std::size_t row : rng.sample_distinct(static_cast<std::size_t>(n),
                                                   static_cast<std::size_t>(k))) {
    model.centroids.row(static_cast<Eigen::Index>(c++)) =
        data->row(static_cast<Eigen::Index>(row));
  }

  if (options.objective_trace != nullptr) options.objective_trace->clear();

  std::vector<int> assignment(n);
  std::vector<double> point_ip(n);
  RowMatrix<double> sums(k, dim);
  std::vector<std::int64_t> counts(k);

  for (int it = 0; it < iterations; ++it) {
    // Assignment: independent per point, freely parallel.
    parallel_chunks(static_cast<std::size_t>(n), options.workers,
                    [&](std::size_t b, std::size_t e, std::size_t) {
                      for (std::size_t i = b; i < e; ++i) {
                        assignment[i] = argmax_inner_product(
                            model.centroids, data->data() + i * dim, &point_ip[i]);
                      }
                    });

    if (options.objective_trace != nullptr) {
      double obj = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) obj += point_ip[i];
      options.objective_trace->push_back(obj);
    }

    // Update: single sequential accumulation in point order, so centroid
    // bits are independent of the worker count.
    sums.setZero();
    std::fill(counts.begin(), counts.end(), std::int64_t{0});
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = assignment[i];
      const float* row = data->data() + i * dim;
      double* acc = sums.data() + static_cast<Eigen::Index>(c) * dim;
      for (Eigen::Index j = 0; j < dim; ++j) acc[j] += row[j];
      counts[c] += 1;
    }

    std::vector<int> empties;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        empties.push_back(c);
        continue;
      }
      const double* acc = sums.data() + static_cast<Eigen::Index>(c) * dim;
      double sq = 0.0;
      for (Eigen::Index j = 0; j < dim; ++j) sq += acc[j] * acc[j];
      if (sq <= 0.0) {
        empties.push_back(c);  // degenerate mean, treat like an empty cluster
        continue;
      }
      const double inv = 1.0 / std::sqrt(sq);
      float* out = model.centroids.data() + static_cast<Eigen::Index>(c) * dim;
      for (Eigen::Index j = 0; j < dim; ++j) {
        out[j] = static_cast<float>(acc[j] * inv);
      }
    }

    if (!empties.empty()) {
      // Reseed each empty cluster with the worst-fit point: smallest inner
      // product with its assigned centroid, ties to the smallest row index.
      std::vector<Eigen::Index> order(n);
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (point_ip[a] != point_ip[b]) return point_ip[a] < point_ip[b];
        return a < b;
      });
      std::size_t next = 0;
      for (int c : empties) {
        if (next >= order.size()) break;
        model.centroids.row(c) = data->row(order[next]);
        ++next;
      }
    }
  }

  return model;
}

std::set<int> build_cluster_set(const ClusterModel& model,
                                const EmbeddingTable& references, int workers) {
  std::set<int> out;
  if (references.count() == 0) return out;
  for (int c : assign_all(model, references, workers)) out.insert(c);
  return out;
}

SubsetManifest image_based_filter(const PoolView& pool, const std::string& family,
                                  const ClusterModel& model,
                                  const std::set<int>& cluster_set,
                                  const LanguageDetector& detector, int workers) {
  const EmbeddingTable& table = pool.embedding(family);
  if (table.dim() != model.dim()) {
    throw ConfigError("embedding family '" + family + "' has dim " +
                      std::to_string(table.dim()) + " but model expects " +
                      std::to_string(model.dim()));
  }

  const std::size_t n = pool.row_count();
  std::vector<char> kept(n, 0);
  parallel_chunks(n, workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      const SampleRecord& r = pool.records[i];
      if (!caption_length_pass(r) || !detector.is_english(r.text)) continue;
      const int c = argmax_inner_product(model.centroids,
                                         table.row(static_cast<Eigen::Index>(i)), nullptr);
      if (cluster_set.count(c) > 0) kept[i] = 1;
    }
  });

  std::vector<Uid> uids;
  for (std::size_t i = 0; i < n; ++i) {
    if (kept[i]) uids.push_back(pool.records[i].uid);
  }
  return SubsetManifest(std::move(uids), pool.pool_id, "image_based(" + family + ")");
}

SubsetManifest min_distance_rank_filter(const PoolView& pool, const std::string& family,
                                        const EmbeddingTable& references,
                                        double fraction, int workers) {
  if (references.count() == 0) throw ConfigError("reference table is empty");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("fraction must lie in (0,1], got " + std::to_string(fraction));
  }
  const EmbeddingTable& table = pool.embedding(family);
  if (table.dim() != references.dim()) {
    throw ConfigError("pool and reference embedding dims differ: " +
                      std::to_string(table.dim()) + " vs " +
                      std::to_string(references.dim()));
  }

  const std::size_t n = pool.row_count();
  const Eigen::Index m = references.count();
  const Eigen::Index dim = table.dim();
  std::vector<double> distance(n);
  parallel_chunks(n, workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      const float* row = table.row(static_cast<Eigen::Index>(i));
      double best = dot_accum(references.row(0), row, dim);
      for (Eigen::Index r = 1; r < m; ++r) {
        best = std::max(best, dot_accum(references.row(r), row, dim));
      }
      distance[i] = 1.0 - best;
    }
  });

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (distance[a] != distance[b]) return distance[a] < distance[b];
    return pool.records[a].uid < pool.records[b].uid;
  });

  const auto keep =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  std::vector<Uid> uids;
  uids.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) uids.push_back(pool.records[order[i]].uid);
  return SubsetManifest(std::move(uids), pool.pool_id,
                        "min_distance_rank(" + family + "," + std::to_string(fraction) + ")");
}

std::vector<std::int64_t> compute_cluster_counts(const ClusterModel& model,
                                                 const EmbeddingTable& references,
                                                 int workers) {
  std::vector<std::int64_t> counts(model.k(), 0);
  for (int c : assign_all(model, references, workers)) counts[c] += 1;
  return counts;
}

void write_cluster_counts(const std::vector<std::int64_t>& counts,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write cluster counts: " + path.string());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out << i << '\t' << counts[i] << '\n';
  }
}

std::vector<std::int64_t> read_cluster_counts(const std::filesystem::path& path,
                                              std::size_t k) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cluster counts: " + path.string());
  std::vector<std::int64_t> counts(k, 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("cluster-count line " + std::to_string(line_no) +
                        " is not `cluster_index<TAB>count`");
    }
    const std::size_t idx = std::stoull(line.substr(0, tab));
    if (idx >= k) {
      throw ValidationError("cluster index " + std::to_string(idx) +
                            " out of range [0," + std::to_string(k) + ")");
    }
    counts[idx] = std::stoll(line.substr(tab + 1));
  }
  return counts;
}

void write_cluster_model(const ClusterModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write cluster model: " + path.string());
  auto put_u32 = [&](std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
  };
  out.write(kMagic, 4);
  put_u32(kFormatVersion);
  put_u32(static_cast<std::uint32_t>(model.k()));
  put_u32(static_cast<std::uint32_t>(model.dim()));
  put_u32(model.iterations);
  char seed_buf[8];
  for (int i = 0; i < 8; ++i) {
    seed_buf[i] = static_cast<char>((model.seed >> (8 * i)) & 0xff);
  }
  out.write(seed_buf, 8);
  out.write(reinterpret_cast<const char*>(model.centroids.data()),
            static_cast<std::streamsize>(sizeof(float) * model.centroids.size()));
  if (!out) throw IoError("cluster model write failed: " + path.string());
}

ClusterModel read_cluster_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cluster model: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad cluster model magic in " + path.string());
  }
  auto get_u32 = [&](const char* what) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4) {
      throw FormatError(std::string("cluster model truncated reading ") + what);
    }
    return std::uint32_t(buf[0]) | std::uint32_t(buf[1]) << 8 |
           std::uint32_t(buf[2]) << 16 | std::uint32_t(buf[3]) << 24;
  };
  const std::uint32_t version = get_u32("version");
  if (version != kFormatVersion) {
    throw FormatError("unsupported cluster model version " + std::to_string(version));
  }
  const std::uint32_t k = get_u32("k");
  const std::uint32_t dim = get_u32("dim");
  ClusterModel model;
  model.iterations = get_u32("iterations");
  unsigned char seed_buf[8];
  in.read(reinterpret_cast<char*>(seed_buf), 8);
  if (in.gcount() != 8) throw FormatError("cluster model truncated reading seed");
  model.seed = 0;
  for (int i = 7; i >= 0; --i) model.seed = (model.seed << 8) | seed_buf[i];
  model.centroids.resize(k, dim);
  const std::streamsize payload =
      static_cast<std::streamsize>(sizeof(float)) * model.centroids.size();
  in.read(reinterpret_cast<char*>(model.centroids.data()), payload);
  if (in.gcount() != payload) {
    throw FormatError("cluster model payload truncated: " + path.string());
  }
  return model;
}

}  // namespace curate
