#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace exptwist {

// Runs body(i) for i in [0, n) over fixed-size index blocks claimed by a pool
// of worker threads. Results must be written to per-index slots: with that
// discipline the output is identical for any thread count, including 1.
template <typename Body>
void parallel_for(std::size_t n, const Body& body, std::size_t block = 1024,
                  unsigned n_threads = 0) {
    if (n == 0) return;
    if (n_threads == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        n_threads = hw == 0 ? 1 : hw;
    }
    const std::size_t n_blocks = (n + block - 1) / block;
    if (n_threads == 1 || n_blocks == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t blk = next.fetch_add(1);
            if (blk >= n_blocks) return;
            const std::size_t lo = blk * block;
            const std::size_t hi = lo + block < n ? lo + block : n;
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace exptwist
