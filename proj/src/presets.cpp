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
#include "curate/presets.hpp"

#include <fstream>

#include "curate/error.hpp"

#include "json.hpp"

namespace curate {

const std::vector<ClipThresholdPreset>& clip_threshold_presets() {
  static const std::vector<ClipThresholdPreset> kPresets = {
      {"ViT-B/32", false, 0.384, "1%", 0.01},
      {"ViT-B/32", false, 0.358, "3%", 0.03},
      {"ViT-B/32", true, 0.300, "10.2%", 0.102},
      {"ViT-B/32", false, 0.325, "10%", 0.10},
      {"ViT-B/32", true, 0.28, "7.4%", 0.074},
      {"ViT-B/32", false, 0.300, "20%", 0.20},
      {"ViT-B/32", false, 0.281, "30%", 0.30},
      {"ViT-B/32", false, 0.263, "40%", 0.40},
      {"ViT-B/32", false, 0.247, "50%", 0.50},
      {"ViT-B/32", false, 0.215, "75%", 0.75},
      {"ViT-B/32", false, 0.193, "90%", 0.90},
      {"ViT-L/14", false, 0.364, "1%", 0.01},
      {"ViT-L/14", false, 0.334, "3%", 0.03},
      {"ViT-L/14", true, 0.300, "5.4%", 0.054},
      {"ViT-L/14", false, 0.295, "10%", 0.10},
      {"ViT-L/14", true, 0.280, "3.3%", 0.033},
      {"ViT-L/14", false, 0.266, "20%", 0.20},
      {"ViT-L/14", false, 0.243, "30%", 0.30},
      {"ViT-L/14", false, 0.222, "40%", 0.40},
      {"ViT-L/14", false, 0.203, "50%", 0.50},
      {"ViT-L/14", false, 0.160, "75%", 0.75},
      {"ViT-L/14", false, 0.129, "90%", 0.90},
  };
  return kPresets;
}

const ClipThresholdPreset& find_clip_preset(const std::string& model,
                                            const std::string& fraction_label) {
  for (const auto& p : clip_threshold_presets()) {
    if (p.model == model && p.fraction_label == fraction_label) return p;
  }
  throw ConfigError("no CLIP threshold preset for model '" + model +
                    "' at fraction '" + fraction_label + "'");
}

void write_presets_json(const std::filesystem::path& path) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& p : clip_threshold_presets()) {
    nlohmann::ordered_json row;
    row["model"] = p.model;
    row["english_filtering"] = p.english_filtering;
    row["threshold"] = p.threshold;
    row["fraction_label"] = p.fraction_label;
    row["fraction"] = p.fraction;
    rows.push_back(std::move(row));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write presets file: " + path.string());
  out << rows.dump(2) << '\n';
}

std::vector<ClipThresholdPreset> load_presets_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open presets file: " + path.string());
  nlohmann::json rows;
  try {
    in >> rows;
  } catch (const nlohmann::json::parse_error& ex) {
    throw FormatError("bad presets JSON in " + path.string() + ": " + ex.what());
  }
  std::vector<ClipThresholdPreset> out;
  for (const auto& row : rows) {
    out.push_back(ClipThresholdPreset{
        row.at("model").get<std::string>(),
        row.at("english_filtering").get<bool>(),
        row.at("threshold").get<double>(),
        row.at("fraction_label").get<std::string>(),
        row.at("fraction").get<double>(),
    });
  }
  return out;
}

}  // namespace curate
