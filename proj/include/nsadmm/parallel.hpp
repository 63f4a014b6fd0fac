#ifndef NSADMM_PARALLEL_HPP_
#define NSADMM_PARALLEL_HPP_

#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace nsadmm {

//! Runs fn(i) for i in [0, n) across worker threads. Each index owns its
//! output slot, so results are deterministic regardless of scheduling;
//! reductions over the slots must be done by the caller in index order.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn, unsigned max_threads = 0) {
  if (n <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  unsigned workers = max_threads == 0 ? hw : std::min(hw, max_threads);
  if (workers > static_cast<unsigned>(n)) workers = static_cast<unsigned>(n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::int64_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace nsadmm

#endif  // NSADMM_PARALLEL_HPP_
