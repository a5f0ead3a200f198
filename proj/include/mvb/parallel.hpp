#ifndef MVB_PARALLEL_HPP
#define MVB_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mvb {

/// Index-parallel loop. Work items must be independent; callers that need
/// deterministic aggregation store per-index results and reduce in index
/// order afterwards.
template <class Fn>
void parallel_for(int64_t count, bool parallel, Fn&& fn) {
    if (count <= 0) return;
    if (!parallel || count == 1) {
        for (int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers == 1) {
        for (int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace mvb

#endif
