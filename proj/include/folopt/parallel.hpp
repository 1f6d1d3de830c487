#pragma once

#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace folopt {

/// Number of workers to use given a user cap (0 means "all cores").
inline unsigned resolve_threads(unsigned requested) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return requested == 0 ? hw : std::min(requested, hw);
}

/// Runs fn(i) for i in [0, n).  Work items must be independent; results
/// should be written to per-index slots so the outcome is deterministic
/// regardless of the schedule.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    const unsigned nw = resolve_threads(threads);
    if (nw <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (unsigned t = 0; t < nw; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nw) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Pairwise summation: deterministic (ordering-independent of thread
/// count) and more accurate than left-to-right accumulation.
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace folopt
