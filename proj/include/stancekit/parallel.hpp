#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <mutex>

namespace stancekit {

/// Runs fn(i) for i in [0, n) on up to `max_workers` threads. After the first
/// exception no new indices are started; the exception is rethrown once all
/// running calls have returned.
void parallel_for(std::size_t n, std::size_t max_workers, const std::function<void(std::size_t)> &fn);

/// Spaces calls to acquire() at least 1/rate seconds apart across threads.
/// A non-positive rate disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second);
    void acquire();

private:
    std::chrono::steady_clock::duration interval_{};
    std::chrono::steady_clock::time_point next_{};
    std::mutex mutex_;
};

}  // namespace stancekit
