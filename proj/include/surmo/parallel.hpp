#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace surmo {

// Global worker count for data-parallel loops. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [begin, end), split into contiguous ranges across
// workers. Every index writes only its own output slots, so results are
// bit-identical for any worker count.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& range_fn);

inline void parallel_for_each(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn) {
    parallel_for(begin, end, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) fn(i);
    });
}

}  // namespace surmo
