#include "holosplat/threading.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace holosplat {

namespace {
std::atomic<unsigned> g_thread_cap{0};
}

void set_thread_cap(unsigned n) { g_thread_cap.store(n); }

unsigned thread_cap() {
    unsigned n = g_thread_cap.load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = std::min<std::size_t>(thread_cap(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace holosplat
