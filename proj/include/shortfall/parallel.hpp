#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace shortfall {

/// Calls body(begin, end) over contiguous index ranges covering [0, count).
/// Ranges are disjoint, so bodies that write only their own slots give the
/// same result as a serial loop.
template <typename Body>
void parallel_ranges(std::size_t count, Body body, std::size_t min_chunk = 4096) {
    const std::size_t hw = std::max(1U, std::thread::hardware_concurrency());
    const std::size_t chunks = std::min(hw, std::max<std::size_t>(1, count / min_chunk));
    if (chunks <= 1) {
        body(std::size_t{0}, count);
        return;
    }
    const std::size_t step = (count + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    for (std::size_t begin = step; begin < count; begin += step) {
        pool.emplace_back(body, begin, std::min(count, begin + step));
    }
    body(std::size_t{0}, std::min(count, step));
    for (auto& t : pool) t.join();
}

}  // namespace shortfall
