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
#include "curate/tar.hpp"

#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#include "curate/error.hpp"

namespace curate {

namespace {

constexpr std::size_t kBlock = 512;

struct UstarHeader {
  char name[100];
  char mode[8];
  char uid[8];
  char gid[8];
  char size[12];
  char mtime[12];
  char chksum[8];
  char typeflag;
  char linkname[100];
  char magic[6];
  char version[2];
  char uname[32];
  char gname[32];
  char devmajor[8];
  char devminor[8];
  char prefix[155];
  char pad[12];
};
static_assert(sizeof(UstarHeader) == kBlock);

unsigned header_checksum(const UstarHeader& h) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(&h);
  unsigned sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) {
    // The checksum field itself counts as spaces.
    const bool in_chksum = i >= offsetof(UstarHeader, chksum) &&
                           i < offsetof(UstarHeader, chksum) + 8;
    sum += in_chksum ? ' ' : bytes[i];
  }
  return sum;
}

bool block_is_zero(const char* block) {
  for (std::size_t i = 0; i < kBlock; ++i) {
    if (block[i] != 0) return false;
  }
  return true;
}

std::uint64_t parse_octal(const char* field, std::size_t len, const char* what) {
  std::uint64_t v = 0;
  bool any = false;
  for (std::size_t i = 0; i < len; ++i) {
    const char c = field[i];
    if (c == '\0') break;
    if (c == ' ') {
      if (any) break;
      continue;
    }
    if (c < '0' || c > '7') {
      throw FormatError(std::string("bad octal digit in tar ") + what + " field");
    }
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
    any = true;
  }
  return v;
}

}  // namespace

void TarWriter::add(const std::string& name, const std::string& data) {
  if (name.size() > 100) {
    throw ConfigError("tar entry name longer than 100 bytes: " + name);
  }
  UstarHeader h;
  std::memset(&h, 0, sizeof(h));
  std::memcpy(h.name, name.data(), name.size());
  std::memcpy(h.mode, "0000644", 8);
  std::memcpy(h.uid, "0000000", 8);
  std::memcpy(h.gid, "0000000", 8);
  std::snprintf(h.size, sizeof(h.size), "%011llo",
                static_cast<unsigned long long>(data.size()));
  std::memcpy(h.mtime, "00000000000", 12);
  h.typeflag = '0';
  std::memcpy(h.magic, "ustar", 6);
  std::memcpy(h.version, "00", 2);
  std::snprintf(h.chksum, sizeof(h.chksum), "%06o", header_checksum(h));
  h.chksum[7] = ' ';

  out_.write(reinterpret_cast<const char*>(&h), kBlock);
  out_.write(data.data(), static_cast<std::streamsize>(data.size()));
  const std::size_t remainder = data.size() % kBlock;
  if (remainder != 0) {
    static const char zeros[kBlock] = {};
    out_.write(zeros, static_cast<std::streamsize>(kBlock - remainder));
  }
  if (!out_) throw IoError("tar write failed for entry " + name);
}

void TarWriter::finish() {
  if (finished_) throw Error("TarWriter::finish called twice");
  finished_ = true;
  static const char zeros[2 * kBlock] = {};
  out_.write(zeros, 2 * kBlock);
  if (!out_) throw IoError("tar terminator write failed");
}

std::optional<TarEntry> TarReader::next() {
  char block[kBlock];
  for (;;) {
    in_.read(block, kBlock);
    if (in_.gcount() == 0 && in_.eof()) return std::nullopt;  // clean EOF
    if (in_.gcount() != static_cast<std::streamsize>(kBlock)) {
      throw FormatError("tar header truncated");
    }
    if (block_is_zero(block)) return std::nullopt;  // end-of-archive marker

    UstarHeader h;
    std::memcpy(&h, block, kBlock);
    if (std::memcmp(h.magic, "ustar", 5) != 0) {
      throw FormatError("bad ustar magic");
    }
    const std::uint64_t declared = parse_octal(h.chksum, sizeof(h.chksum), "chksum");
    if (declared != header_checksum(h)) {
      throw FormatError("tar header checksum mismatch");
    }
    const std::uint64_t size = parse_octal(h.size, sizeof(h.size), "size");
    const std::size_t padded = (size + kBlock - 1) / kBlock * kBlock;

    if (h.typeflag != '0' && h.typeflag != '\0') {
      // Skip non-regular entries (directories, links) rather than failing.
      in_.ignore(static_cast<std::streamsize>(padded));
      if (!in_) throw FormatError("tar data truncated while skipping entry");
      continue;
    }

    TarEntry entry;
    entry.name.assign(h.name, strnlen(h.name, sizeof(h.name)));
    entry.data.resize(size);
    if (size > 0) {
      in_.read(entry.data.data(), static_cast<std::streamsize>(size));
      if (in_.gcount() != static_cast<std::streamsize>(size)) {
        throw FormatError("tar data truncated in entry " + entry.name);
      }
    }
    if (padded > size) {
      in_.ignore(static_cast<std::streamsize>(padded - size));
      if (!in_) throw FormatError("tar padding truncated in entry " + entry.name);
    }
    return entry;
  }
}

}  // namespace curate
