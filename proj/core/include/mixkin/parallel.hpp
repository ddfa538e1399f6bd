#pragma once

#include <cstddef>
#include <functional>

namespace mixkin {

// Worker cap for all parallel loops; 1 by default.
void set_threads(int k);
int threads();

// Runs fn(chunk, begin, end) over a fixed chunking of [0, n) so results never depend on the thread count.
void parallel_chunks(std::size_t n, std::size_t chunks, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

} // namespace mixkin
