#pragma once

#include <functional>

namespace xtalk {

/// Process-wide worker count for scan/collection loops. 0 = machine
/// parallelism. Set once by the CLI before running a campaign.
void set_worker_count(int workers);
int worker_count();

/// Runs fn(0..n-1), chunked over the configured workers. Each index must
/// write only its own output slot; with per-index RNG streams the result is
/// identical for any worker count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace xtalk
