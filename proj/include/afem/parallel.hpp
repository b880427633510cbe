#pragma once

#include <cstddef>
#include <functional>

namespace afem {

/// Worker count: hardware concurrency capped by FRACTURE_AFEM_THREADS.
int worker_count();

/// Overrides the worker count for the rest of the process (tests, CLI).
void set_worker_count(int n);

/// Runs body(begin, end) over disjoint chunks of [0, n). Chunks write
/// disjoint outputs, so results do not depend on the worker count.
void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

} // namespace afem
