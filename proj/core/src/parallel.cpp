#include "mixkin/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace mixkin {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int k) { g_threads = std::max(1, k); }
int threads() { return g_threads; }

void parallel_chunks(std::size_t n, std::size_t chunks, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    chunks = std::max<std::size_t>(1, std::min(chunks, n));
    auto bounds = [&](std::size_t c) { return std::pair{n * c / chunks, n * (c + 1) / chunks}; };
    const int nt = std::min<int>(threads(), static_cast<int>(chunks));
    if (nt <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            auto [b, e] = bounds(c);
            fn(c, b, e);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) {
                auto [b, e] = bounds(c);
                fn(c, b, e);
            }
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace mixkin
