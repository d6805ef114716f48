#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ctrnli {

class Cancelled : public std::exception {
 public:
  const char* what() const noexcept override { return "run cancelled"; }
};

/// Calls fn(i) for every i in [0, n) on up to `workers` threads. Indices are
/// claimed in increasing order. The first exception stops further claims and
/// is rethrown after all threads join. If `cancel` becomes true, remaining
/// indices are skipped and Cancelled is thrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn, const std::atomic<bool>* cancel = nullptr) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto stop = [&] { return failed.load() || (cancel && cancel->load()); };
  auto work = [&] {
    while (!stop()) {
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const auto count = std::max<std::size_t>(1, std::min(workers, n));
  if (count == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(count);
    for (std::size_t t = 0; t < count; ++t) threads.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  if (cancel && cancel->load() && next.load() < n) throw Cancelled();
}

}  // namespace ctrnli
