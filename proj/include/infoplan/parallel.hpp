#pragma once
// Deterministic fork-join helper shared by the planners and the Monte-Carlo
// driver.

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace infoplan::detail {

// Runs fn(i) for i in [0, n); chunks across the requested worker threads.
// Each index writes only its own slot, so results do not depend on the
// worker count. The first exception (by thread order) is rethrown.
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi, w] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace infoplan::detail
