#pragma once

// Minimal fork-join helper for embarrassingly parallel per-index work.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace simdecay::detail {

// Runs fn(lo, hi) over disjoint chunks of [0, n).  fn must only touch state
// owned by its own index range.  The first exception thrown by any worker is
// rethrown on the calling thread.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    std::size_t workers = std::thread::hardware_concurrency();
    workers = std::clamp<std::size_t>(workers, 1, 16);
    workers = std::min(workers, n);
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }

    std::mutex err_mu;
    std::exception_ptr err;
    auto guarded = [&](std::size_t lo, std::size_t hi) {
        try {
            fn(lo, hi);
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!err) err = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(guarded, lo, hi);
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace simdecay::detail
