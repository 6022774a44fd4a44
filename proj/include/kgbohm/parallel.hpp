#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace kgbohm {

/// Thread count to use: `requested` if nonzero, else KG_BOHM_THREADS if set to
/// a positive integer, else the hardware concurrency (at least 1).
inline std::size_t resolve_threads(std::size_t requested)
{
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("KG_BOHM_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) {
                return static_cast<std::size_t>(v);
            }
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Calls body(i) for i in [0, n) over `threads` workers with a static
/// contiguous partition. Each index is processed exactly once, so results
/// written to slot i do not depend on the thread count. The first exception
/// (lowest worker) is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body)
{
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        const std::size_t begin = n * w / threads;
        const std::size_t end = n * (w + 1) / threads;
        pool.emplace_back([&, w, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    body(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) {
        t.join();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace kgbohm
