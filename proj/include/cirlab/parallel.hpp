#pragma once

// Index-addressed worker pool. Each work item writes only its own slot, so
// the result vector is identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cirlab {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

/// Calls fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by any item is rethrown after all threads have joined.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    const int w = std::max(1, std::min<int>(resolve_workers(workers), int(std::max<std::size_t>(n, 1))));
    if (w == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int t = 0; t < w; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

template <class R, class Fn>
std::vector<R> parallel_map(std::size_t n, int workers, Fn&& fn) {
    std::vector<R> out(n);
    parallel_for(n, workers, [&](std::size_t i) { out[i] = fn(i); });
    return out;
}

} // namespace cirlab
