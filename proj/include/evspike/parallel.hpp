#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace evspike {

/* Run fn(i) for i in [0, n) on up to hardware_concurrency() workers.
 * fn must write results keyed by i only, so the outcome is independent of
 * scheduling. */
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned max_threads = 0) {
    unsigned hw = max_threads ? max_threads : std::thread::hardware_concurrency();
    hw = std::max(1u, std::min<unsigned>(hw, n ? static_cast<unsigned>(std::min<std::size_t>(n, 64)) : 1));
    if (hw == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(hw);
    for (unsigned t = 0; t < hw; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace evspike
