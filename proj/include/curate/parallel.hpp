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

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace curate {

/// Fixed chunk size used by every parallel stage. Chunk boundaries depend
/// only on the element count, never on the worker count, so reductions that
/// combine per-chunk results in chunk order are worker-count invariant.
inline constexpr std::size_t kParallelChunk = 4096;

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kParallelChunk) {
  return (n + chunk - 1) / chunk;
}

/// Runs fn(begin, end, chunk_index) over [0, n) in chunks of `chunk`.
/// Chunks are claimed by an atomic counter; fn must only write state owned
/// by its chunk index. The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_chunks(std::size_t n, int workers, Fn&& fn,
                     std::size_t chunk = kParallelChunk) {
  const std::size_t chunks = chunk_count(n, chunk);
  if (chunks == 0) return;
  if (workers <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t b = c * chunk;
      fn(b, std::min(n, b + chunk), c);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::size_t b = c * chunk;
      try {
        fn(b, std::min(n, b + chunk), c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };

  const std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(workers), chunks);
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace curate
