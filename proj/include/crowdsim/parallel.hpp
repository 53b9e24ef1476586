#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace crowdsim {

/// Worker count from CROWDSIM_THREADS; unset, 0 or unparsable means one per
/// hardware thread.
inline unsigned configured_threads() {
  unsigned n = 0;
  if (const char* env = std::getenv("CROWDSIM_THREADS")) {
    try {
      n = static_cast<unsigned>(std::max(0L, std::stol(env)));
    } catch (const std::exception&) {
      n = 0;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Run fn(i) for i in [0, count) over at most `threads` workers using fixed
/// contiguous chunks. Each index is visited exactly once; callers write
/// results into per-index slots so the outcome does not depend on `threads`.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (std::size_t i = 0; i < std::min(count, chunk); ++i) fn(i);
}

}  // namespace crowdsim
