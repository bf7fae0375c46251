#pragma once

#include <cstddef>
#include <functional>

namespace holoseis {

// Process-wide worker count used by the frequency-level loops. Results are
// written into per-index slots, so reductions stay in index order whatever
// the count is.
void set_worker_count(int n);
int worker_count();

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace holoseis
