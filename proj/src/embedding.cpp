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
#include "curate/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "curate/error.hpp"

namespace curate {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'E', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void write_le(std::ofstream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::ifstream& in, const std::string& what) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw FormatError("embedding sidecar truncated while reading " + what);
  }
  T v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) v = static_cast<T>((v << 8) | buf[i]);
  return v;
}

}  // namespace

void renormalize_rows(MatrixF& rows, const std::string& context) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    float* r = rows.data() + i * d;
    double sq = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = r[j];
      if (!std::isfinite(v)) {
        throw DataError(context + ": non-finite value in embedding row " +
                        std::to_string(i));
      }
      sq += v * v;
    }
    if (sq <= 0.0) {
      throw DataError(context + ": zero-norm embedding row " + std::to_string(i));
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (Eigen::Index j = 0; j < d; ++j) {
      r[j] = static_cast<float>(r[j] * inv);
    }
  }
}

void write_embedding_table(const EmbeddingTable& table,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open sidecar for writing: " + path.string());

  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, kFormatVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim()));
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(table.count()));
  if (table.family.size() > 0xffff) {
    throw ConfigError("embedding family name too long: " + table.family);
  }
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(table.family.size()));
  out.write(table.family.data(), static_cast<std::streamsize>(table.family.size()));

  static_assert(sizeof(float) == 4);
  // Row-major storage matches the on-disk layout; floats are IEEE-754 LE on
  // every supported target.
  out.write(reinterpret_cast<const char*>(table.rows.data()),
            static_cast<std::streamsize>(sizeof(float) * table.rows.size()));
  if (!out) throw IoError("sidecar write failed: " + path.string());
}

EmbeddingTable read_embedding_table(const std::filesystem::path& path,
                                    bool renormalize) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open sidecar: " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad sidecar magic in " + path.string());
  }
  const auto version = read_le<std::uint32_t>(in, "version");
  if (version != kFormatVersion) {
    throw FormatError("unsupported sidecar version " + std::to_string(version));
  }
  const auto dim = read_le<std::uint32_t>(in, "dim");
  const auto count = read_le<std::uint64_t>(in, "count");
  const auto name_len = read_le<std::uint16_t>(in, "family-name length");
  if (dim == 0) throw FormatError("sidecar declares dim 0: " + path.string());

  EmbeddingTable table;
  table.family.resize(name_len);
  if (name_len > 0) {
    in.read(table.family.data(), name_len);
    if (in.gcount() != static_cast<std::streamsize>(name_len)) {
      throw FormatError("sidecar truncated in family name: " + path.string());
    }
  }

  table.rows.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  const std::streamsize payload =
      static_cast<std::streamsize>(sizeof(float)) * table.rows.size();
  in.read(reinterpret_cast<char*>(table.rows.data()), payload);
  if (in.gcount() != payload) {
    throw FormatError("sidecar payload truncated: " + path.string());
  }

  if (renormalize && count > 0) renormalize_rows(table.rows, path.string());
  return table;
}

}  // namespace curate
