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

#include <stdexcept>
#include <string>

namespace curate {

/// Base class for all toolkit errors. The CLI maps the concrete type to an
/// exit code: ConfigError/ValidationError -> 2, DataError/FormatError -> 3,
/// IoError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad parameters or an inconsistent request (unknown family, infeasible
/// target size, mismatched pools, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An input violates a declared invariant (unsorted manifest payload,
/// out-of-range score, malformed face box, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File contents do not conform to an on-disk format (bad magic, truncated
/// payload, unparseable line).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input carrying unusable values (non-finite embeddings,
/// row-count mismatches, missing required keys or scores).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Operating-system level failure, always with path context in the message.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace curate
