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
#include "curate/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_set>

#include "curate/error.hpp"

namespace curate {

namespace {

using nlohmann::json;

void require_nonempty(const PredictionSet& preds) {
  if (preds.entries.empty()) {
    throw DataError("metric undefined on empty prediction set for task '" +
                    preds.task_name + "'");
  }
}

bool top_k_hit(const PredictionEntry& e, int k) {
  const int limit = std::min<int>(k, static_cast<int>(e.ranking.size()));
  for (int i = 0; i < limit; ++i) {
    if (std::find(e.gold.begin(), e.gold.end(), e.ranking[i]) != e.gold.end()) {
      return true;
    }
  }
  return false;
}

std::string label_from_json(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  throw FormatError("prediction label must be a string or integer");
}

}  // namespace

PredictionSet read_predictions(const std::filesystem::path& path,
                               const std::string& task_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions: " + path.string());

  PredictionSet preds;
  preds.task_name = task_name;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw FormatError("bad JSON on line " + std::to_string(line_no) + " of " +
                        path.string() + ": " + ex.what());
    }
    PredictionEntry e;
    if (auto it = j.find("id"); it != j.end()) e.id = label_from_json(*it);
    auto gold_it = j.find("gold");
    if (gold_it == j.end()) {
      throw DataError("prediction on line " + std::to_string(line_no) +
                      " is missing 'gold'");
    }
    if (gold_it->is_array()) {
      for (const auto& g : *gold_it) e.gold.push_back(label_from_json(g));
    } else {
      e.gold.push_back(label_from_json(*gold_it));
    }
    auto rank_it = j.find("ranking");
    if (rank_it == j.end() || !rank_it->is_array()) {
      throw DataError("prediction on line " + std::to_string(line_no) +
                      " is missing 'ranking'");
    }
    std::unordered_set<std::string> seen;
    for (const auto& r : *rank_it) {
      std::string label = label_from_json(r);
      if (!seen.insert(label).second) {
        throw ValidationError("ranking on line " + std::to_string(line_no) +
                              " repeats label '" + label + "'");
      }
      e.ranking.push_back(std::move(label));
    }
    if (auto it = j.find("group"); it != j.end() && !it->is_null()) {
      e.group = label_from_json(*it);
    }
    preds.entries.push_back(std::move(e));
  }
  return preds;
}

double accuracy(const PredictionSet& preds) { return top_k_accuracy(preds, 1); }

double top_k_accuracy(const PredictionSet& preds, int k) {
  require_nonempty(preds);
  if (k < 1) throw ConfigError("top-k requires k >= 1");
  std::size_t hits = 0;
  for (const auto& e : preds.entries) {
    if (top_k_hit(e, k)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.entries.size());
}

double mean_per_class_accuracy(const PredictionSet& preds) {
  require_nonempty(preds);
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
  for (const auto& e : preds.entries) {
    if (e.gold.empty()) throw DataError("example without gold label");
    auto& [hits, total] = per_class[e.gold.front()];
    ++total;
    if (top_k_hit(e, 1)) ++hits;
  }
  double sum = 0.0;
  for (const auto& [cls, ht] : per_class) {
    sum += static_cast<double>(ht.first) / static_cast<double>(ht.second);
  }
  return sum / static_cast<double>(per_class.size());
}

double worst_group_accuracy(const PredictionSet& preds, int k,
                            const std::vector<std::string>& declared_groups,
                            std::vector<std::string>* warnings) {
  require_nonempty(preds);
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_group;
  for (const auto& e : preds.entries) {
    if (!e.group) {
      throw DataError("worst-group metric requires a group id on every example");
    }
    auto& [hits, total] = per_group[*e.group];
    ++total;
    if (top_k_hit(e, k)) ++hits;
  }
  for (const std::string& g : declared_groups) {
    if (per_group.find(g) == per_group.end() && warnings != nullptr) {
      warnings->push_back("declared group '" + g + "' has no examples; excluded");
    }
  }
  double worst = 1.0;
  for (const auto& [group, ht] : per_group) {
    worst = std::min(worst,
                     static_cast<double>(ht.first) / static_cast<double>(ht.second));
  }
  return worst;
}

double jaccard_score(const std::set<std::string>& pred,
                     const std::set<std::string>& gold) {
  if (gold.empty()) throw DataError("jaccard requires a nonempty gold set");
  if (pred.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& p : pred) inter += gold.count(p);
  const std::size_t uni = pred.size() + gold.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_jaccard(const PredictionSet& preds) {
  require_nonempty(preds);
  double sum = 0.0;
  for (const auto& e : preds.entries) {
    sum += jaccard_score(std::set<std::string>(e.ranking.begin(), e.ranking.end()),
                         std::set<std::string>(e.gold.begin(), e.gold.end()));
  }
  return sum / static_cast<double>(preds.entries.size());
}

double retrieval_recall_at_1(const std::vector<bool>& image_to_text_hits,
                             const std::vector<bool>& text_to_image_hits) {
  if (image_to_text_hits.empty() || text_to_image_hits.empty()) {
    throw DataError("retrieval recall undefined: one direction has no examples");
  }
  auto mean = [](const std::vector<bool>& v) {
    std::size_t hits = 0;
    for (bool b : v) hits += b ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(v.size());
  };
  return (mean(image_to_text_hits) + mean(text_to_image_hits)) / 2.0;
}

double retrieval_recall_at_1(const PredictionSet& preds) {
  require_nonempty(preds);
  std::vector<bool> i2t, t2i;
  for (const auto& e : preds.entries) {
    if (!e.group) {
      throw DataError("retrieval metric requires group 'image_to_text' or "
                      "'text_to_image' on every example");
    }
    if (*e.group == "image_to_text") {
      i2t.push_back(top_k_hit(e, 1));
    } else if (*e.group == "text_to_image") {
      t2i.push_back(top_k_hit(e, 1));
    } else {
      throw DataError("unknown retrieval direction '" + *e.group + "'");
    }
  }
  return retrieval_recall_at_1(i2t, t2i);
}

double macro_f1(const PredictionSet& preds) {
  require_nonempty(preds);
  struct Tally {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Tally> per_class;
  for (const auto& e : preds.entries) {
    if (e.gold.empty() || e.ranking.empty()) {
      throw DataError("macro F1 requires gold and a nonempty ranking");
    }
    const std::string& gold = e.gold.front();
    const std::string& pred = e.ranking.front();
    if (gold == pred) {
      per_class[gold].tp += 1;
    } else {
      per_class[gold].fn += 1;
      per_class[pred].fp += 1;
    }
  }
  double sum = 0.0;
  for (const auto& [cls, t] : per_class) {
    const double denom = 2.0 * t.tp + t.fp + t.fn;
    sum += denom > 0 ? 2.0 * t.tp / denom : 0.0;
  }
  return sum / static_cast<double>(per_class.size());
}

std::vector<TaskRegistryEntry> load_task_registry(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open task registry: " + path.string());
  json rows;
  try {
    in >> rows;
  } catch (const json::parse_error& ex) {
    throw FormatError("bad registry JSON in " + path.string() + ": " + ex.what());
  }
  std::vector<TaskRegistryEntry> out;
  for (const auto& row : rows) {
    TaskRegistryEntry e;
    e.task = row.at("task").get<std::string>();
    e.metric = row.at("metric").get<std::string>();
    e.clean = row.value("clean", true);
    out.push_back(std::move(e));
  }
  return out;
}

double apply_metric(const TaskRegistryEntry& entry, const PredictionSet& preds) {
  if (entry.metric == "accuracy") return accuracy(preds);
  if (entry.metric == "mean_per_class") return mean_per_class_accuracy(preds);
  if (entry.metric == "worst_group") return worst_group_accuracy(preds, 1);
  if (entry.metric == "worst_group_top5") return worst_group_accuracy(preds, 5);
  if (entry.metric == "macro_f1") return macro_f1(preds);
  if (entry.metric == "retrieval_recall_at_1") return retrieval_recall_at_1(preds);
  if (entry.metric == "jaccard") return mean_jaccard(preds);
  throw ConfigError("unknown metric '" + entry.metric + "' for task '" + entry.task + "'");
}

MetricReport aggregate_report(const std::vector<TaskValue>& per_task,
                              const std::vector<std::string>& clean_exclusions) {
  if (per_task.empty()) throw ConfigError("aggregate_report requires at least one task");
  std::unordered_set<std::string> seen;
  for (const auto& t : per_task) {
    if (!seen.insert(t.task).second) {
      throw ConfigError("duplicate task name '" + t.task + "'");
    }
  }

  MetricReport report;
  report.per_task = per_task;
  double sum = 0.0;
  for (const auto& t : per_task) sum += t.value;
  report.average = sum / static_cast<double>(per_task.size());

  if (!clean_exclusions.empty()) {
    const std::unordered_set<std::string> excluded(clean_exclusions.begin(),
                                                   clean_exclusions.end());
    double clean_sum = 0.0;
    std::size_t clean_count = 0;
    for (const auto& t : per_task) {
      if (excluded.count(t.task) > 0) continue;
      clean_sum += t.value;
      ++clean_count;
    }
    if (clean_count > 0) {
      report.clean_average = clean_sum / static_cast<double>(clean_count);
    }
  }
  return report;
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
  for (const auto& t : per_task) {
    nlohmann::ordered_json row;
    row["task"] = t.task;
    row["metric"] = t.metric;
    row["value"] = t.value;
    tasks.push_back(std::move(row));
  }
  j["per_task"] = std::move(tasks);
  j["average"] = average;
  if (clean_average) j["clean_average"] = *clean_average;
  return j;
}

}  // namespace curate
