#pragma once

#include <cstddef>
#include <functional>

namespace bmfg {

/// Splits [0, n) into `workers` contiguous chunks (in order) and runs
/// fn(begin, end, worker) for each, on separate threads when workers > 1.
/// Exceptions from any chunk are rethrown on the calling thread (first chunk wins).
/// `workers == 0` means std::thread::hardware_concurrency().
void parallel_chunks(std::size_t n, std::size_t workers,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

/// Number of chunks parallel_chunks will actually use.
std::size_t effective_workers(std::size_t n, std::size_t workers);

} // namespace bmfg
