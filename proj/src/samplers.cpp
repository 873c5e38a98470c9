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
#include "curate/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "curate/rng.hpp"

namespace curate {

SynsetIndex build_synset_index(const PoolView& pool, const SynsetLexicon& lexicon) {
  SynsetIndex index;
  std::unordered_map<std::string, std::int32_t> interned;

  index.matched.resize(pool.row_count());
  for (std::size_t i = 0; i < pool.row_count(); ++i) {
    std::set<std::int32_t> hits;
    for (const std::string& token : tokenize_caption(pool.records[i].text)) {
      auto it = lexicon.word_to_offset.find(token);
      if (it == lexicon.word_to_offset.end()) continue;
      auto [interned_it, fresh] =
          interned.try_emplace(it->second, static_cast<std::int32_t>(index.offsets.size()));
      if (fresh) {
        index.offsets.push_back(it->second);
        index.counts.push_back(0);
      }
      hits.insert(interned_it->second);
    }
    index.matched[i].assign(hits.begin(), hits.end());
    for (std::int32_t j : index.matched[i]) index.counts[j] += 1;
  }
  return index;
}

double synset_weight(const SynsetIndex& index, std::size_t record, double alpha,
                     SynsetWeightMode mode) {
  const auto& t = index.matched[record];
  if (t.empty()) return 0.0;
  if (mode == SynsetWeightMode::average) {
    double sum = 0.0;
    for (std::int32_t j : t) {
      sum += std::pow(static_cast<double>(index.counts[j]), alpha - 1.0);
    }
    return sum / static_cast<double>(t.size());
  }
  double best = 0.0;
  for (std::int32_t j : t) {
    best = std::max(best, std::pow(static_cast<double>(index.counts[j]), alpha - 1.0));
  }
  return best;
}

namespace {

/// Inverse-CDF draw over cumulative weights: smallest i with cum[i] > u.
std::size_t draw_index(const std::vector<double>& cum, double u) {
  const double target = u * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), target);
  return std::min(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

/// Shared rejection loop: draws record indices from `draw`, enforcing the
/// per-uid repeat cap.
SubsetManifest sample_with_cap(const PoolView& pool, const SamplingParams& params,
                               std::size_t distinct_support_uids,
                               const std::string& label,
                               SeededRng& rng,
                               const std::function<std::size_t(SeededRng&)>& draw) {
  if (params.repeat_cap < 1) throw ConfigError("repeat_cap must be >= 1");
  if (params.target_size > params.repeat_cap * distinct_support_uids) {
    throw ConfigError("target_size " + std::to_string(params.target_size) +
                      " unachievable: repeat cap " + std::to_string(params.repeat_cap) +
                      " x " + std::to_string(distinct_support_uids) +
                      " distinct support uids");
  }

  std::map<Uid, std::size_t> multiplicity;
  std::vector<Uid> out;
  out.reserve(params.target_size);
  while (out.size() < params.target_size) {
    const std::size_t rec = draw(rng);
    const Uid& uid = pool.records[rec].uid;
    auto& m = multiplicity[uid];
    if (m >= params.repeat_cap) continue;  // rejected, redraw
    ++m;
    out.push_back(uid);
  }
  return SubsetManifest(std::move(out), pool.pool_id, label, params.repeat_cap);
}

}  // namespace

SubsetManifest text_sample(const PoolView& pool, const SynsetIndex& index,
                           const SamplingParams& params) {
  if (!(params.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");

  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < pool.row_count(); ++i) {
    if (!index.matched[i].empty()) support.push_back(i);
  }
  if (support.empty()) throw DataError("text_sample: no record matches any synset");

  std::vector<double> cum(support.size());
  double acc = 0.0;
  for (std::size_t s = 0; s < support.size(); ++s) {
    acc += synset_weight(index, support[s], params.alpha, params.mode);
    cum[s] = acc;
  }
  if (!(acc > 0.0)) throw DataError("text_sample: all weights are zero");

  std::set<Uid> distinct;
  for (std::size_t i : support) distinct.insert(pool.records[i].uid);

  SeededRng rng(params.seed);
  return sample_with_cap(
      pool, params, distinct.size(),
      "text_sample(alpha=" + std::to_string(params.alpha) + ")", rng,
      [&](SeededRng& r) { return support[draw_index(cum, r.uniform())]; });
}

SubsetManifest image_sample(const PoolView& pool, const std::string& family,
                            const ClusterModel& model,
                            const std::vector<std::int64_t>& reference_counts,
                            const SamplingParams& params, int workers) {
  if (!(params.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (reference_counts.size() != static_cast<std::size_t>(model.k())) {
    throw ConfigError("reference_counts size " + std::to_string(reference_counts.size()) +
                      " does not match model k " + std::to_string(model.k()));
  }
  for (std::int64_t s : reference_counts) {
    if (s < 0) throw ValidationError("cluster score must be >= 0");
  }

  const std::vector<int> assignment = assign_all(model, pool.embedding(family), workers);
  std::vector<std::vector<std::size_t>> members(model.k());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    members[assignment[i]].push_back(i);
  }

  // Clusters with s_i = 0 are outside the distribution for every alpha
  // (0^0 = 0 by convention here).
  std::vector<std::size_t> clusters;
  std::vector<double> cum;
  double acc = 0.0;
  bool any_member = false;
  std::set<Uid> distinct;
  for (std::size_t c = 0; c < reference_counts.size(); ++c) {
    if (reference_counts[c] <= 0) continue;
    clusters.push_back(c);
    acc += std::pow(static_cast<double>(reference_counts[c]), params.alpha);
    cum.push_back(acc);
    if (!members[c].empty()) any_member = true;
    for (std::size_t i : members[c]) distinct.insert(pool.records[i].uid);
  }
  if (clusters.empty()) throw DataError("image_sample: all cluster scores are zero");
  if (!any_member) throw DataError("image_sample: every scored cluster is empty");

  SeededRng rng(params.seed);
  return sample_with_cap(
      pool, params, distinct.size(),
      "image_sample(alpha=" + std::to_string(params.alpha) + ")", rng,
      [&](SeededRng& r) -> std::size_t {
        for (;;) {
          const std::size_t c = clusters[draw_index(cum, r.uniform())];
          const auto& m = members[c];
          if (m.empty()) continue;  // empty cluster, redraw
          return m[r.bounded(m.size())];
        }
      });
}

}  // namespace curate
