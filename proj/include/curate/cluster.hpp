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
#include <set>
#include <vector>

#include "curate/embedding.hpp"
#include "curate/filters.hpp"
#include "curate/manifest.hpp"
#include "curate/record.hpp"

namespace curate {

/// K unit-norm centroids from spherical k-means, plus the fit parameters.
struct ClusterModel {
  MatrixF centroids;  // K x dim, unit rows
  std::uint32_t iterations = 0;
  std::uint64_t seed = 0;

  Eigen::Index k() const { return centroids.rows(); }
  Eigen::Index dim() const { return centroids.cols(); }
};

struct KmeansOptions {
  int workers = 1;
  /// Fit on a seeded random subsample of at most this many rows (0 = all).
  std::size_t fit_sample_size = 0;
  /// Filled with the per-iteration objective, measured after each assignment
  /// step: sum over points of the inner product with the assigned centroid.
  /// Non-decreasing across iterations.
  std::vector<double>* objective_trace = nullptr;
};

/// Spherical k-means: initialization draws K distinct rows uniformly with
/// the seeded generator; each iteration assigns points by maximum inner
/// product then recomputes centroids as the renormalized mean of assigned
/// points; empty clusters are reseeded with the point farthest (smallest
/// inner product) from its assigned centroid. Deterministic for fixed
/// (points, K, iterations, seed) regardless of worker count: per-cluster
/// partial sums are accumulated over fixed-size chunks and combined in chunk
/// order.
ClusterModel kmeans_fit(const EmbeddingTable& points, int k, int iterations,
                        std::uint64_t seed, const KmeansOptions& options = {});

/// Index of the centroid with maximum inner product; ties to the smallest
/// index. Throws DataError on dimension mismatch.
int assign_cluster(const ClusterModel& model, const float* v, Eigen::Index dim);

/// Per-row assignment, parallel over rows (pure, order-independent).
std::vector<int> assign_all(const ClusterModel& model, const EmbeddingTable& points,
                            int workers = 1);

/// Cluster indices hit by at least one reference row: {assign(model, f) : f}.
std::set<int> build_cluster_set(const ClusterModel& model,
                                const EmbeddingTable& references, int workers = 1);

/// Keeps records passing the prefilter (English caption + caption length,
/// the text gate applied before clustering) whose assigned cluster index is
/// in `cluster_set`.
SubsetManifest image_based_filter(const PoolView& pool, const std::string& family,
                                  const ClusterModel& model,
                                  const std::set<int>& cluster_set,
                                  const LanguageDetector& detector, int workers = 1);

/// Ranks the pool by min over references of (1 - inner product) and keeps
/// the floor(fraction*N) records with the smallest distance; ties broken by
/// ascending uid. Exact blocked dense scan, no approximation.
SubsetManifest min_distance_rank_filter(const PoolView& pool, const std::string& family,
                                        const EmbeddingTable& references,
                                        double fraction, int workers = 1);

/// Number of reference rows assigned to each cluster (the per-cluster scores
/// used by cluster sampling).
std::vector<std::int64_t> compute_cluster_counts(const ClusterModel& model,
                                                 const EmbeddingTable& references,
                                                 int workers = 1);

/// Cluster score file: UTF-8 lines `cluster_index<TAB>count`.
void write_cluster_counts(const std::vector<std::int64_t>& counts,
                          const std::filesystem::path& path);
std::vector<std::int64_t> read_cluster_counts(const std::filesystem::path& path,
                                              std::size_t k);

/// Model file: magic "DCKM", version u32 LE, K u32 LE, dim u32 LE,
/// iterations u32 LE, seed u64 LE, then K x dim 32-bit LE reals.
void write_cluster_model(const ClusterModel& model, const std::filesystem::path& path);
ClusterModel read_cluster_model(const std::filesystem::path& path);

}  // namespace curate
