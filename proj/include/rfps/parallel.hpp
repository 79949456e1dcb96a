#pragma once

#include <cstddef>
#include <functional>

namespace rfps {

// 0 means "all available cores".
int resolve_threads(int requested);

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// processed exactly once; if bodies throw, the exception of the lowest failing
// index is rethrown after all workers finish, so failures are reported the
// same way regardless of the thread count.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace rfps
