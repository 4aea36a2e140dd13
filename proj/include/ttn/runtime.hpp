#pragma once

#include <cstddef>
#include <functional>

namespace ttn {

// Caps the number of worker threads used by parallel sections.
// 0 restores the default (hardware concurrency).
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for i in [0, n_tasks). Tasks may execute on any worker in any
// order, so results are reproducible only if each task writes state owned by
// its own index; all callers in this library follow that rule and reduce the
// per-task results serially afterwards.
void parallel_tasks(std::size_t n_tasks, const std::function<void(std::size_t)>& fn);

// Fixed sample-block size used for deterministic parallel reductions.
// Partition boundaries depend only on the sample count, never on the
// worker count.
inline constexpr std::size_t kSampleBlock = 512;

inline std::size_t block_count(std::size_t n_items) {
  return (n_items + kSampleBlock - 1) / kSampleBlock;
}

}  // namespace ttn
