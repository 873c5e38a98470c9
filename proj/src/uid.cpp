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
#include "curate/uid.hpp"

#include <openssl/evp.h>

#include <cstring>

#include "curate/error.hpp"

namespace curate {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

Uid Uid::from_hex(std::string_view hex) {
  if (hex.size() != 32) {
    throw FormatError("uid hex form must be 32 characters, got " +
                      std::to_string(hex.size()));
  }
  Bytes bytes{};
  for (int i = 0; i < 16; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw FormatError("uid hex form contains non-lowercase-hex character: " +
                        std::string(hex));
    }
    bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return Uid(bytes);
}

std::string Uid::hex() const {
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    out[2 * i] = kHexDigits[bytes_[i] >> 4];
    out[2 * i + 1] = kHexDigits[bytes_[i] & 0xf];
  }
  return out;
}

Uid derive_uid(std::string_view url, std::string_view text, DigestKind kind) {
  const EVP_MD* md = kind == DigestKind::md5 ? EVP_md5() : EVP_sha256();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error("EVP_MD_CTX_new failed");
  bool ok = EVP_DigestInit_ex(ctx, md, nullptr) == 1;
  if (ok && !url.empty())
    ok = EVP_DigestUpdate(ctx, url.data(), url.size()) == 1;
  if (ok && !text.empty())
    ok = EVP_DigestUpdate(ctx, text.data(), text.size()) == 1;
  if (ok) ok = EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok || len < 16) throw Error("digest computation failed");

  Uid::Bytes bytes;
  std::memcpy(bytes.data(), digest, 16);
  return Uid(bytes);
}

DigestKind digest_kind_from_name(std::string_view name) {
  if (name == "md5") return DigestKind::md5;
  if (name == "sha256_128") return DigestKind::sha256_128;
  throw ConfigError("unknown digest kind: " + std::string(name));
}

std::string digest_kind_name(DigestKind kind) {
  return kind == DigestKind::md5 ? "md5" : "sha256_128";
}

}  // namespace curate
