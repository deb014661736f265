#pragma once

#include <cstddef>
#include <functional>

namespace qicnn {

// Worker count used by batch-parallel kernels. 1 (the default) runs inline.
void set_num_threads(int n);
int num_threads();

// Calls fn(i) for i in [0, n). Work items must be independent; any reduction
// over them is the caller's job and has to happen in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace qicnn
