#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace explore {

/// Library-wide worker cap; 0 means hardware concurrency.  Set from the CLI
/// --threads flag.
inline unsigned& max_threads() {
  static unsigned cap = 0;
  return cap;
}

inline unsigned effective_threads(std::size_t n_items) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  unsigned cap = max_threads() == 0 ? hw : max_threads();
  if (cap > n_items) cap = static_cast<unsigned>(n_items ? n_items : 1);
  return cap == 0 ? 1 : cap;
}

/// Runs fn(i) for i in [0, n).  Results must be written to per-index slots;
/// combined with an ordered reduction this keeps results independent of the
/// thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = effective_threads(n);
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Deterministic pairwise sum over a fixed-order buffer.
inline double pairwise_sum(const double* data, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

}  // namespace explore
