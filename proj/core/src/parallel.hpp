#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace excepta::detail {

// Runs f(i) for i in [0, n) on up to `jobs` threads. Each index is handled by
// exactly one call, so writes to per-index slots need no locking. The first
// exception thrown is rethrown after all threads join.
template <class F>
void parallel_for(int n, int jobs, F&& f) {
    jobs = std::clamp(jobs, 1, std::max(1, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < n; i += jobs) f(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace excepta::detail
