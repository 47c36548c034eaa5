#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace adcs {

/// Number of workers used by parallel_for; 0 means hardware concurrency.
inline unsigned& parallel_workers() {
    static unsigned n = 0;
    return n;
}

/**
 * Runs fn(i) for i in [0, n) across worker threads. Each index is visited
 * exactly once and results must be written to per-index slots, so output is
 * independent of the worker count. The exception thrown at the lowest index
 * is rethrown after all workers join.
 */
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = parallel_workers() != 0 ? parallel_workers() : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::size_t>(n, 64))));
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace adcs
