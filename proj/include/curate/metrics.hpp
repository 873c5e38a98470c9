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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace curate {

/// One scored example: gold label(s) and the predicted label ranking in
/// descending confidence. Association tasks carry gold sets; classification
/// tasks a single gold label.
struct PredictionEntry {
  std::string id;
  std::vector<std::string> gold;
  std::vector<std::string> ranking;
  std::optional<std::string> group;
};

struct PredictionSet {
  std::string task_name;
  std::vector<PredictionEntry> entries;
};

/// Prediction file: UTF-8 JSON lines
///   {"id": ..., "gold": ..., "ranking": [...], "group": ...}
/// gold may be a scalar or an array; group is optional. Rankings must not
/// repeat labels (ValidationError).
PredictionSet read_predictions(const std::filesystem::path& path,
                               const std::string& task_name);

/// Fraction of examples whose top-ranked label equals gold.
double accuracy(const PredictionSet& preds);

/// Gold label within the first k ranked labels.
double top_k_accuracy(const PredictionSet& preds, int k);

/// Unweighted mean over observed gold classes of within-class accuracy.
double mean_per_class_accuracy(const PredictionSet& preds);

/// Minimum over groups of per-group top-k accuracy. Every example must
/// carry a group id. `declared_groups`, when given, lists the expected
/// groups; declared groups with no examples are excluded and reported in
/// `warnings`.
double worst_group_accuracy(const PredictionSet& preds, int k,
                            const std::vector<std::string>& declared_groups = {},
                            std::vector<std::string>* warnings = nullptr);

/// |pred intersect gold| / |pred union gold|; empty pred with nonempty gold
/// is 0. Gold must be nonempty.
double jaccard_score(const std::set<std::string>& pred, const std::set<std::string>& gold);

/// Mean per-example Jaccard score; the prediction set's ranking is treated
/// as the predicted label set.
double mean_jaccard(const PredictionSet& preds);

/// Arithmetic mean of the two directional recalls.
double retrieval_recall_at_1(const std::vector<bool>& image_to_text_hits,
                             const std::vector<bool>& text_to_image_hits);

/// Directional form over a prediction set whose group field is
/// "image_to_text" or "text_to_image"; a hit is gold containing the
/// top-ranked label.
double retrieval_recall_at_1(const PredictionSet& preds);

/// Unweighted mean F1 over the classes observed in gold or top-1
/// predictions (classes with undefined precision or recall score 0).
double macro_f1(const PredictionSet& preds);

struct TaskRegistryEntry {
  std::string task;
  std::string metric;  // accuracy | mean_per_class | worst_group |
                       // worst_group_top5 | macro_f1 | retrieval_recall_at_1 |
                       // jaccard
  bool clean = true;   // member of the 33-task clean view
};

/// Registry file: JSON array of {task, metric, clean} rows; mirrors the
/// benchmark's preferred-metric table.
std::vector<TaskRegistryEntry> load_task_registry(const std::filesystem::path& path);

/// Applies a registry entry's preferred metric to a prediction set.
double apply_metric(const TaskRegistryEntry& entry, const PredictionSet& preds);

struct TaskValue {
  std::string task;
  std::string metric;
  double value = 0.0;
};

struct MetricReport {
  std::vector<TaskValue> per_task;
  double average = 0.0;
  /// Mean over tasks outside the clean-view exclusion list; present when an
  /// exclusion list was supplied.
  std::optional<double> clean_average;

  nlohmann::ordered_json to_json() const;
};

/// Arithmetic mean of the per-task values, tasks kept in input order.
/// Duplicate task names are a ConfigError. `clean_exclusions` names tasks
/// excluded from the clean average.
MetricReport aggregate_report(const std::vector<TaskValue>& per_task,
                              const std::vector<std::string>& clean_exclusions = {});

}  // namespace curate
