#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace kprobe {

// Worker cap: KILLING_PROBE_THREADS wins, else hardware concurrency.
inline int worker_count() {
    if (const char* env = std::getenv("KILLING_PROBE_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0,count). Tasks must be pure and write only to their
// own slot, so results are scheduling-invariant. If several tasks throw, the
// one with the smallest index is rethrown.
inline void parallel_for(int count, const std::function<void(int)>& fn, int workers = 0) {
    if (count <= 0) return;
    if (workers <= 0) workers = worker_count();
    if (workers > count) workers = count;

    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }

    std::vector<std::exception_ptr> errors(count);
    std::atomic<int> next{0};
    auto body = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();

    for (int i = 0; i < count; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);
}

} // namespace kprobe
