// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace splatvox {

/// 0 means auto: SPLATVOX_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned resolve_threads(unsigned requested);

/// Splits [0, n) into `threads` contiguous chunks and runs body(begin, end)
/// on each, one std::thread per chunk beyond the first. Chunk boundaries
/// depend only on n and threads.
template <typename Body>
void parallel_for_chunks(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t base = n / workers;
    const std::size_t extra = n % workers;
    std::size_t begin = 0;
    std::size_t first_end = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t end = begin + base + (w < extra ? 1 : 0);
        if (w == 0)
            first_end = end;
        else
            pool.emplace_back([&body, begin, end] { body(begin, end); });
        begin = end;
    }
    body(std::size_t{0}, first_end);
}

} // namespace splatvox
