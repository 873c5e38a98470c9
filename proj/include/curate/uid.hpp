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

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace curate {

/// 128-bit sample identifier. Bytes are stored big-endian so that the
/// lexicographic order of the byte array (and of the hex form) equals the
/// unsigned integer order of the 128-bit value.
class Uid {
 public:
  using Bytes = std::array<std::uint8_t, 16>;

  constexpr Uid() : bytes_{} {}
  explicit constexpr Uid(const Bytes& bytes) : bytes_(bytes) {}

  /// Parses the canonical 32-lowercase-hex text form. Throws FormatError on
  /// anything else (wrong length, uppercase, non-hex characters).
  static Uid from_hex(std::string_view hex);

  /// Canonical text form: 32 lowercase hex characters.
  std::string hex() const;

  const Bytes& bytes() const { return bytes_; }

  auto operator<=>(const Uid&) const = default;

 private:
  Bytes bytes_;
};

enum class DigestKind {
  md5,         // default; 128-bit digest
  sha256_128,  // first 16 bytes of SHA-256
};

/// Deterministic uid for a sample: digest of the UTF-8 bytes of url
/// immediately followed by text, no separator. Empty inputs are legal.
Uid derive_uid(std::string_view url, std::string_view text,
               DigestKind kind = DigestKind::md5);

DigestKind digest_kind_from_name(std::string_view name);
std::string digest_kind_name(DigestKind kind);

}  // namespace curate
