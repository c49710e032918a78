#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qpkr {

/// Runs fn(i) for i in [0, count) on up to `workers` threads.
///
/// Work is handed out through a shared counter, so which thread runs an index
/// is unspecified; callers write results into per-index slots and reduce them
/// afterwards in index order. If any fn(i) throws, the exception with the
/// lowest index is rethrown after all threads join.
template <class Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    if (count <= 0) return;
    workers = std::clamp(workers, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::mutex err_mutex;
    int err_index = count;
    std::exception_ptr err;

    auto body = [&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    pool.clear();
    if (err) std::rethrow_exception(err);
}

}  // namespace qpkr
