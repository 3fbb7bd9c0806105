#pragma once
#include <cstddef>
#include <thread>
#include <vector>

namespace seq {

namespace detail {
inline std::size_t& thread_count_ref() {
    static std::size_t n = 1;
    return n;
}
} // namespace detail

inline void set_threads(std::size_t n) { detail::thread_count_ref() = n == 0 ? 1 : n; }
inline std::size_t threads() { return detail::thread_count_ref(); }

// Splits [begin, end) into contiguous chunks, one per worker. Each index is
// processed by exactly one thread with unchanged per-index arithmetic, so
// results are identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
    const std::size_t n = end > begin ? end - begin : 0;
    const std::size_t workers = std::min(threads(), n == 0 ? std::size_t(1) : n);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace seq
