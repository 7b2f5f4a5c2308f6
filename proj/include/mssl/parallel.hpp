#pragma once

#include <functional>

#include "mssl/core.hpp"

namespace mssl {

/// Worker cap: MISSPEC_SSL_THREADS if set and positive, else hardware concurrency.
int worker_count();

/// Overrides the environment for the current process; 0 restores the default.
void set_worker_count(int n);

/// Runs body(begin, end) over disjoint chunks of [0, n). Calls made from inside
/// another parallel_for run serially on the calling thread.
void parallel_for(Index n, const std::function<void(Index, Index)>& body);

}  // namespace mssl
