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
#include <string>
#include <vector>

namespace curate {

/// One CLIP threshold configuration: the similarity threshold and the pool
/// fraction it retains, per scoring model, with or without English
/// filtering.
struct ClipThresholdPreset {
  std::string model;           // "ViT-B/32" or "ViT-L/14"
  bool english_filtering;
  double threshold;
  std::string fraction_label;  // e.g. "30%"
  double fraction;             // e.g. 0.30
};

/// The shipped threshold<->fraction table (22 rows).
const std::vector<ClipThresholdPreset>& clip_threshold_presets();

/// Resolves a preset row by model and fraction label, e.g.
/// ("ViT-B/32", "30%") -> threshold 0.281. Throws ConfigError when absent.
const ClipThresholdPreset& find_clip_preset(const std::string& model,
                                            const std::string& fraction_label);

void write_presets_json(const std::filesystem::path& path);
std::vector<ClipThresholdPreset> load_presets_json(const std::filesystem::path& path);

}  // namespace curate
