#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace pathqa {

inline int effective_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn over [0, n) split into contiguous chunks, one per worker. Callers
// write results into disjoint, index-addressed slots, so the output does not
// depend on scheduling. The first worker exception (lowest chunk) is rethrown
// after all workers finish.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    threads = effective_threads(threads);
    if (n == 0) return;
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, &errors, w, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace pathqa
