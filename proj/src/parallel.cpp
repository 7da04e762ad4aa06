#include "surmo/parallel.hpp"

#include <atomic>

namespace surmo {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n); }

int thread_count() {
    int n = g_threads.load();
    if (n == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : int(hw);
    }
    return n;
}

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& range_fn) {
    int64_t count = end - begin;
    if (count <= 0) return;
    int workers = std::min<int64_t>(thread_count(), count);
    if (workers <= 1 || count < 2) {
        range_fn(begin, end);
        return;
    }
    int64_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(size_t(workers - 1));
    for (int w = 1; w < workers; ++w) {
        int64_t lo = begin + w * chunk;
        int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&range_fn, lo, hi] { range_fn(lo, hi); });
    }
    range_fn(begin, std::min(end, begin + chunk));
    for (auto& t : threads) t.join();
}

}  // namespace surmo
