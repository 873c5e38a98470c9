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

namespace curate {

/// SHA-256 of a file's bytes as 64 lowercase hex chars. Used for run
/// provenance (input digests) and preset-file integrity checks.
std::string sha256_file_hex(const std::filesystem::path& path);

/// SHA-256 of an in-memory buffer.
std::string sha256_hex(std::string_view bytes);

}  // namespace curate
