#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace delaynet {

/// Default worker count: DELAYNET_THREADS when set, else hardware concurrency.
inline unsigned default_threads() {
  if (const char* env = std::getenv("DELAYNET_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Error raised by replica `index`.
class ReplicaError : public std::runtime_error {
 public:
  ReplicaError(std::size_t index, const std::string& what)
      : std::runtime_error("replica " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Run fn(r) for r in [0, count) on up to `threads` workers. Results are
/// stored by index, so the output does not depend on scheduling. The lowest
/// failing index is rethrown as ReplicaError.
template <class F>
auto run_replicas(std::size_t count, unsigned threads, F&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> results(count);
  std::vector<std::string> errors(count);
  std::vector<char> failed(count, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < count;) {
      try {
        results[r] = fn(r);
      } catch (const std::exception& e) {
        failed[r] = 1;
        errors[r] = e.what();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t r = 0; r < count; ++r)
    if (failed[r]) throw ReplicaError(r, errors[r]);
  return results;
}

}  // namespace delaynet
