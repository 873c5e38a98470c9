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

#include <iosfwd>
#include <optional>
#include <string>

namespace curate {

/// Minimal POSIX ustar support: 512-byte blocks, uncompressed, regular files
/// only. Written headers are fully deterministic (mode 0644, uid/gid 0,
/// mtime 0), so archive bytes are a pure function of the entry sequence.

struct TarEntry {
  std::string name;
  std::string data;
};

class TarWriter {
 public:
  explicit TarWriter(std::ostream& out) : out_(out) {}

  void add(const std::string& name, const std::string& data);

  /// Writes the two terminating zero blocks. Must be called exactly once.
  void finish();

 private:
  std::ostream& out_;
  bool finished_ = false;
};

class TarReader {
 public:
  explicit TarReader(std::istream& in) : in_(in) {}

  /// Next regular-file entry, or nullopt at the end-of-archive marker (or
  /// clean EOF). Throws FormatError on corrupt headers or truncated data.
  std::optional<TarEntry> next();

 private:
  std::istream& in_;
};

}  // namespace curate
