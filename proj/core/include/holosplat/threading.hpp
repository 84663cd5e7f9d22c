#pragma once

#include <cstddef>
#include <functional>

namespace holosplat {

/// Process-wide cap on worker threads (CLI --threads / HOLOSPLAT_THREADS).
/// 0 means hardware concurrency.
void set_thread_cap(unsigned n);
unsigned thread_cap();

/// Runs fn(i) for i in [0, count). Work items must be independent;
/// results must not depend on which thread runs which item.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace holosplat
