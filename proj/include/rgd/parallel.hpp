#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <thread>
#include <vector>

namespace rgd {

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Pairwise tree reduction over leaves 0..count-1.  The tree shape depends
// only on `count`, so the result is bit-identical for any worker count:
// combine(left, right) is always applied to the same operand pairs in the
// same association.  `leaf(i)` must be independent of scheduling.
template <class T, class Leaf, class Combine>
T tree_reduce(std::int64_t lo, std::int64_t hi, const Leaf& leaf,
              const Combine& combine, int workers = 1) {
  if (hi - lo == 1) return leaf(lo);
  const std::int64_t mid = lo + (hi - lo) / 2;
  if (workers > 1 && hi - lo >= 4) {
    auto right = std::async(std::launch::async, [&] {
      return tree_reduce<T>(mid, hi, leaf, combine, workers - workers / 2);
    });
    T left = tree_reduce<T>(lo, mid, leaf, combine, workers / 2);
    return combine(std::move(left), right.get());
  }
  T left = tree_reduce<T>(lo, mid, leaf, combine, 1);
  T right = tree_reduce<T>(mid, hi, leaf, combine, 1);
  return combine(std::move(left), std::move(right));
}

// Runs body(i) for i in [0, count) over a fixed-size chunk grid scheduled on
// `workers` threads.  Chunk boundaries are a pure function of (count,
// chunk_size), never of the worker count.
inline void parallel_for_chunked(std::int64_t count, std::int64_t chunk_size,
                                 int workers,
                                 const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (count <= 0) return;
  const std::int64_t n_chunks = (count + chunk_size - 1) / chunk_size;
  if (workers <= 1 || n_chunks == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c)
      body(c * chunk_size, std::min(count, (c + 1) * chunk_size));
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      body(c * chunk_size, std::min(count, (c + 1) * chunk_size));
    }
  };
  std::vector<std::thread> pool;
  const int nb = std::min<std::int64_t>(workers, n_chunks);
  pool.reserve(nb);
  for (int t = 0; t < nb; ++t) pool.emplace_back(run);
  for (auto& th : pool) th.join();
}

}  // namespace rgd
