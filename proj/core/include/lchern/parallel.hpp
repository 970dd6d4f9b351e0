#pragma once

#include <cstddef>
#include <functional>

namespace lchern {

/// Worker cap used by all data-parallel loops. Defaults to $LCHERN_THREADS
/// when set, otherwise to the hardware concurrency.
int max_threads();
void set_max_threads(int n);

/// Runs body(i) for i in [0, count). Work is split into contiguous blocks;
/// callers write results into slot i so the outcome never depends on the
/// number of threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace lchern
