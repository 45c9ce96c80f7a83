#pragma once

// Deterministic chunked parallelism: work items are split into fixed-size
// chunks, workers grab chunks through an atomic counter, and per-chunk
// results are combined afterwards in chunk-index order.  The outcome is
// bitwise independent of the thread count.

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace iunorm {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// fn(chunk_begin, chunk_end) -> Acc; results merged in chunk order via
// combine(acc, chunk_acc).
template <class Acc, class Fn, class Combine>
Acc run_chunked(std::int64_t total, std::int64_t chunk, int threads, Fn fn, Combine combine) {
    if (total <= 0) return Acc{};
    if (chunk <= 0) chunk = 1;
    const std::int64_t n_chunks = (total + chunk - 1) / chunk;
    std::vector<Acc> results(static_cast<std::size_t>(n_chunks));
    const int workers = std::min<std::int64_t>(resolve_threads(threads), n_chunks);
    if (workers <= 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c)
            results[static_cast<std::size_t>(c)] =
                fn(c * chunk, std::min(total, (c + 1) * chunk));
    } else {
        std::atomic<std::int64_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto work = [&] {
            try {
                for (;;) {
                    const std::int64_t c = next.fetch_add(1);
                    if (c >= n_chunks) break;
                    results[static_cast<std::size_t>(c)] =
                        fn(c * chunk, std::min(total, (c + 1) * chunk));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_chunks); // stop remaining workers
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    Acc acc{};
    for (auto& r : results) combine(acc, r);
    return acc;
}

} // namespace iunorm
