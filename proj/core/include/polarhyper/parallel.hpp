/* Fixed-chunk work partition. Chunk boundaries depend only on (n, chunk),
 * never on the worker count, so per-chunk results merged in chunk index
 * order give bit-identical totals for any number of workers.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace polar {

inline size_t chunk_count(size_t n, size_t chunk) {
  return n == 0 ? 0 : (n + chunk - 1) / chunk;
}

// fn(chunk_index, begin, end) over [0, n) in chunks of `chunk` items.
inline void parallel_chunks(
    size_t n, size_t chunk, int workers,
    const std::function<void(size_t, size_t, size_t)>& fn) {
  const size_t nchunks = chunk_count(n, chunk);
  if (workers <= 1 || nchunks <= 1) {
    for (size_t ci = 0; ci < nchunks; ++ci)
      fn(ci, ci * chunk, std::min(n, (ci + 1) * chunk));
    return;
  }
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t ci; (ci = next.fetch_add(1)) < nchunks;)
      fn(ci, ci * chunk, std::min(n, (ci + 1) * chunk));
  };
  std::vector<std::thread> threads;
  const int extra = std::min<int>(workers - 1, (int)nchunks - 1);
  threads.reserve((size_t)extra);
  for (int w = 0; w < extra; ++w) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
}

}  // namespace polar
