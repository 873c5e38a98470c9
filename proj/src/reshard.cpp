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
#include "curate/reshard.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "curate/error.hpp"
#include "curate/tar.hpp"

namespace curate {

namespace {

std::string shard_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard-%08zu.tar", index);
  return buf;
}

/// Writes samples into shard files chunked at samples_per_shard. Output
/// bytes are a pure function of the sample stream and the chunk size.
class ShardSetWriter {
 public:
  ShardSetWriter(std::filesystem::path dir, std::size_t samples_per_shard)
      : dir_(std::move(dir)), samples_per_shard_(samples_per_shard) {}

  void add(const ShardSample& sample) {
    if (!writer_) {
      path_ = dir_ / shard_name(shard_index_);
      out_.open(path_, std::ios::binary | std::ios::trunc);
      if (!out_) throw IoError("cannot open output shard: " + path_.string());
      writer_.emplace(out_);
    }
    writer_->add(sample.key + ".jpg", sample.jpg);
    writer_->add(sample.key + ".txt", sample.txt);
    writer_->add(sample.key + ".json", sample.json);
    ++samples_in_shard_;
    ++samples_written_;
    if (samples_in_shard_ == samples_per_shard_) close_current();
  }

  void finish() {
    if (writer_) close_current();
  }

  std::size_t samples_written() const { return samples_written_; }
  std::size_t bytes_written() const { return bytes_written_; }

 private:
  void close_current() {
    writer_->finish();
    bytes_written_ += static_cast<std::size_t>(out_.tellp());
    out_.close();
    if (out_.fail()) throw IoError("output shard close failed: " + path_.string());
    writer_.reset();
    out_ = std::ofstream();
    samples_in_shard_ = 0;
    ++shard_index_;
  }

  std::filesystem::path dir_;
  std::size_t samples_per_shard_;
  std::size_t shard_index_ = 0;
  std::size_t samples_in_shard_ = 0;
  std::size_t samples_written_ = 0;
  std::size_t bytes_written_ = 0;
  std::filesystem::path path_;
  std::ofstream out_;
  std::optional<TarWriter> writer_;
};

/// Splits "<uidhex>[-k].<ext>" into key and extension.
bool split_entry_name(const std::string& name, std::string* key, std::string* ext) {
  const auto dot = name.rfind('.');
  if (dot == std::string::npos || dot == 0) return false;
  *key = name.substr(0, dot);
  *ext = name.substr(dot + 1);
  return *ext == "jpg" || *ext == "txt" || *ext == "json";
}

std::optional<Uid> base_uid_of_key(const std::string& key) {
  const auto dash = key.find('-');
  const std::string hex = dash == std::string::npos ? key : key.substr(0, dash);
  try {
    return Uid::from_hex(hex);
  } catch (const FormatError&) {
    return std::nullopt;
  }
}

/// Streams complete samples out of one shard, grouping adjacent same-key
/// entries. Returns false when the archive itself is unreadable (error
/// recorded); sample-level problems are recorded and skipped.
bool scan_shard(const std::filesystem::path& path, std::size_t shard_index,
                std::vector<std::string>* errors,
                const std::function<void(ShardSample&&)>& on_sample) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    errors->push_back("shard " + std::to_string(shard_index) + ": cannot open " +
                      path.string());
    return false;
  }
  TarReader reader(in);

  ShardSample current;
  int parts = 0;
  auto flush = [&]() {
    if (parts == 0) return;
    if (parts == 7) {  // jpg|txt|json bits all set
      on_sample(std::move(current));
    } else {
      errors->push_back("shard " + std::to_string(shard_index) +
                        ": incomplete sample entries for key '" + current.key + "'");
    }
    current = ShardSample{};
    parts = 0;
  };

  for (;;) {
    std::optional<TarEntry> entry;
    try {
      entry = reader.next();
    } catch (const FormatError& ex) {
      errors->push_back("shard " + std::to_string(shard_index) + ": " + ex.what());
      return false;  // tar stream cannot be resynchronized
    }
    if (!entry) break;

    std::string key, ext;
    if (!split_entry_name(entry->name, &key, &ext)) {
      errors->push_back("shard " + std::to_string(shard_index) +
                        ": unexpected entry name '" + entry->name + "'");
      continue;
    }
    if (parts != 0 && key != current.key) flush();
    current.key = key;
    if (ext == "jpg") {
      current.jpg = std::move(entry->data);
      parts |= 1;
    } else if (ext == "txt") {
      current.txt = std::move(entry->data);
      parts |= 2;
    } else {
      current.json = std::move(entry->data);
      parts |= 4;
    }
    if (parts == 7) flush();
  }
  flush();
  return true;
}

/// Distinct manifest uids plus found flags; lookup by binary search.
struct FoundTracker {
  std::vector<Uid> distinct;
  std::vector<char> found;

  explicit FoundTracker(const SubsetManifest& manifest)
      : distinct(manifest.distinct()), found(distinct.size(), 0) {}

  void mark(const Uid& u) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), u);
    if (it != distinct.end() && *it == u) found[it - distinct.begin()] = 1;
  }

  std::vector<Uid> missing() const {
    std::vector<Uid> out;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      if (!found[i]) out.push_back(distinct[i]);
    }
    return out;
  }
};

void ensure_empty_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (std::filesystem::exists(dir, ec)) {
    if (!std::filesystem::is_directory(dir, ec)) {
      throw ConfigError("output path is not a directory: " + dir.string());
    }
    if (!std::filesystem::is_empty(dir, ec)) {
      throw ConfigError("refusing to reshard into non-empty directory: " + dir.string());
    }
  } else if (!std::filesystem::create_directories(dir, ec)) {
    throw IoError("cannot create output directory: " + dir.string());
  }
}

ReshardReport reshard_into(const std::filesystem::path& input_dir,
                           const SubsetManifest& manifest, ShardSetWriter& writer,
                           std::size_t begin_shard, std::size_t end_shard,
                           const ProgressFn& progress) {
  const auto shards = list_shards(input_dir);
  if (end_shard > shards.size() || begin_shard > end_shard) {
    throw ConfigError("shard range [" + std::to_string(begin_shard) + "," +
                      std::to_string(end_shard) + ") out of bounds for " +
                      std::to_string(shards.size()) + " shards");
  }

  ReshardReport report;
  FoundTracker tracker(manifest);

  for (std::size_t s = begin_shard; s < end_shard; ++s) {
    scan_shard(shards[s], s, &report.shard_errors, [&](ShardSample&& sample) {
      ++report.samples_scanned;
      const auto uid = base_uid_of_key(sample.key);
      if (!uid) {
        report.shard_errors.push_back("shard " + std::to_string(s) +
                                      ": key '" + sample.key + "' is not a uid");
        return;
      }
      const std::size_t k = manifest.multiplicity(*uid);
      if (k == 0) return;
      tracker.mark(*uid);
      const std::string base_key = uid->hex();
      for (std::size_t copy = 0; copy < k; ++copy) {
        ShardSample out = sample;
        out.key = copy == 0 ? base_key : base_key + "-" + std::to_string(copy);
        writer.add(out);
      }
    });
    ++report.shards_read;
    if (progress) progress(report.shards_read, end_shard - begin_shard);
  }

  report.missing_uids = tracker.missing();
  return report;
}

}  // namespace

nlohmann::ordered_json ReshardReport::to_json() const {
  nlohmann::ordered_json j;
  j["shards_read"] = shards_read;
  j["samples_scanned"] = samples_scanned;
  j["samples_written"] = samples_written;
  nlohmann::ordered_json missing = nlohmann::ordered_json::array();
  for (const Uid& u : missing_uids) missing.push_back(u.hex());
  j["missing_uids"] = std::move(missing);
  j["bytes_written"] = bytes_written;
  j["shard_errors"] = shard_errors;
  return j;
}

std::vector<std::filesystem::path> list_shards(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("shard directory does not exist: " + dir.string());
  }
  std::vector<std::filesystem::path> shards;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.starts_with("shard-") && name.ends_with(".tar")) {
      shards.push_back(entry.path());
    }
  }
  std::sort(shards.begin(), shards.end());
  return shards;
}

std::vector<std::pair<std::size_t, std::size_t>> plan_partitions(
    std::size_t shard_count, int workers) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  const auto w = static_cast<std::size_t>(workers);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(w);
  const std::size_t base = shard_count / w;
  const std::size_t rem = shard_count % w;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < w; ++i) {
    const std::size_t len = base + (i < rem ? 1 : 0);
    ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  return ranges;
}

ReshardReport reshard(const std::filesystem::path& input_dir,
                      const SubsetManifest& manifest,
                      const std::filesystem::path& output_dir,
                      std::size_t samples_per_shard, const ProgressFn& progress) {
  if (samples_per_shard == 0) throw ConfigError("samples_per_shard must be >= 1");
  ensure_empty_output_dir(output_dir);
  const std::size_t total = list_shards(input_dir).size();
  ShardSetWriter writer(output_dir, samples_per_shard);
  ReshardReport report = reshard_into(input_dir, manifest, writer, 0, total, progress);
  writer.finish();
  report.samples_written = writer.samples_written();
  report.bytes_written = writer.bytes_written();
  return report;
}

ReshardReport reshard_range(const std::filesystem::path& input_dir,
                            const SubsetManifest& manifest,
                            const std::filesystem::path& output_dir,
                            std::size_t begin_shard, std::size_t end_shard,
                            std::size_t samples_per_shard, const ProgressFn& progress) {
  if (samples_per_shard == 0) throw ConfigError("samples_per_shard must be >= 1");
  ensure_empty_output_dir(output_dir);
  ShardSetWriter writer(output_dir, samples_per_shard);
  ReshardReport report =
      reshard_into(input_dir, manifest, writer, begin_shard, end_shard, progress);
  writer.finish();
  report.samples_written = writer.samples_written();
  report.bytes_written = writer.bytes_written();
  return report;
}

ReshardReport reshard_parallel(const std::filesystem::path& input_dir,
                               const SubsetManifest& manifest,
                               const std::filesystem::path& output_dir,
                               std::size_t samples_per_shard, int workers,
                               const ProgressFn& progress) {
  if (workers <= 1) {
    return reshard(input_dir, manifest, output_dir, samples_per_shard, progress);
  }
  ensure_empty_output_dir(output_dir);
  const std::size_t total = list_shards(input_dir).size();
  const auto ranges = plan_partitions(total, workers);

  std::vector<std::filesystem::path> part_dirs;
  std::vector<ReshardReport> part_reports(ranges.size());
  std::vector<std::exception_ptr> part_errors(ranges.size());
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), ".part-%04zu", i);
    part_dirs.push_back(output_dir / buf);
  }

  std::vector<std::thread> threads;
  threads.reserve(ranges.size());
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        part_reports[i] = reshard_range(input_dir, manifest, part_dirs[i],
                                        ranges[i].first, ranges[i].second,
                                        samples_per_shard);
      } catch (...) {
        part_errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& err : part_errors) {
    if (err) std::rethrow_exception(err);
  }

  // Merge: re-chunk the concatenated per-range sample streams. The stream
  // equals the single-worker scan order, so the final shard files are
  // byte-identical to a single-worker run.
  ReshardReport report;
  ShardSetWriter writer(output_dir, samples_per_shard);
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto part_shards = list_shards(part_dirs[i]);
    for (std::size_t s = 0; s < part_shards.size(); ++s) {
      scan_shard(part_shards[s], s, &report.shard_errors,
                 [&](ShardSample&& sample) { writer.add(sample); });
    }
  }
  writer.finish();

  std::vector<Uid> all_missing;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto& r = part_reports[i];
    report.shards_read += r.shards_read;
    report.samples_scanned += r.samples_scanned;
    report.shard_errors.insert(report.shard_errors.end(), r.shard_errors.begin(),
                               r.shard_errors.end());
    all_missing.insert(all_missing.end(), r.missing_uids.begin(), r.missing_uids.end());
  }
  // A uid is missing only if no worker found it: ranges are disjoint, so a
  // found uid is absent from exactly one worker's missing list.
  std::sort(all_missing.begin(), all_missing.end());
  for (std::size_t i = 0; i < all_missing.size();) {
    std::size_t j = i;
    while (j < all_missing.size() && all_missing[j] == all_missing[i]) ++j;
    if (j - i == ranges.size()) report.missing_uids.push_back(all_missing[i]);
    i = j;
  }

  report.samples_written = writer.samples_written();
  report.bytes_written = writer.bytes_written();

  for (const auto& dir : part_dirs) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
  if (progress) progress(report.shards_read, total);
  return report;
}

bool verify_shards(const std::filesystem::path& output_dir,
                   const SubsetManifest& manifest, const std::vector<Uid>& missing,
                   VerifyDiff* diff) {
  VerifyDiff local;
  VerifyDiff* d = diff != nullptr ? diff : &local;
  d->problems.clear();

  std::map<Uid, std::size_t> observed;
  const auto shards = list_shards(output_dir);
  std::vector<std::string> scan_errors;
  for (std::size_t s = 0; s < shards.size(); ++s) {
    scan_shard(shards[s], s, &scan_errors, [&](ShardSample&& sample) {
      const auto uid = base_uid_of_key(sample.key);
      if (!uid) {
        d->problems.push_back("unparseable key '" + sample.key + "'");
        return;
      }
      observed[*uid] += 1;
    });
  }
  for (const auto& e : scan_errors) d->problems.push_back(e);

  std::map<Uid, std::size_t> expected;
  for (const Uid& u : manifest.distinct()) expected[u] = manifest.multiplicity(u);
  for (const Uid& u : missing) expected[u] = 0;

  for (const auto& [uid, want] : expected) {
    const auto it = observed.find(uid);
    const std::size_t got = it == observed.end() ? 0 : it->second;
    if (got != want) {
      d->problems.push_back("uid " + uid.hex() + ": expected multiplicity " +
                            std::to_string(want) + ", found " + std::to_string(got));
    }
  }
  for (const auto& [uid, got] : observed) {
    if (expected.find(uid) == expected.end()) {
      d->problems.push_back("uid " + uid.hex() + ": present in output but not in manifest");
    }
  }
  return d->problems.empty();
}

}  // namespace curate
