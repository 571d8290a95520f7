#pragma once

// Fixed-size pool over a pre-sorted task list. Results land in task order, so
// any reduction over them is independent of the worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

#include "mbl/errors.hpp"

namespace mbl {

/// Process-wide cancellation request (set from a signal handler). Workers
/// finish their in-flight task and take no new ones.
inline std::atomic<bool>& cancellation_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

class Cancelled : public Error {
 public:
  Cancelled() : Error("cancelled") {}
};

template <typename Task, typename Fn>
auto parallel_map(const std::vector<Task>& tasks, unsigned workers, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, const Task&>> {
  using Result = std::invoke_result_t<Fn&, const Task&>;
  std::vector<std::optional<Result>> slots(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};

  auto run = [&] {
    for (;;) {
      if (cancellation_flag().load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        slots[i].emplace(fn(tasks[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(tasks.size())));
  if (n == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }

  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (cancellation_flag().load()) throw Cancelled();

  std::vector<Result> out;
  out.reserve(tasks.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace mbl
