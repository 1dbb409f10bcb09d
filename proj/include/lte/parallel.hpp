#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace lte {

namespace detail {
inline std::atomic<int>& thread_limit() {
    static std::atomic<int> n{1};
    return n;
}
} // namespace detail

/// Caps the number of worker threads used by parallel_for. 1 = sequential.
inline void set_max_threads(int n) { detail::thread_limit() = n < 1 ? 1 : n; }
inline int max_threads() { return detail::thread_limit(); }

/// Runs fn(i) for i in [0, n). Each index writes only its own output slot,
/// so results are identical for any thread count, including 1.
template <typename F>
void parallel_for(std::size_t n, F&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace lte
