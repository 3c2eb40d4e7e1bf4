#pragma once

#include <cstdint>
#include <functional>

namespace mvsflow {

// Sets the worker count used by all parallel loops (0 = hardware default).
void SetNumThreads(int num_threads);
int GetNumThreads();

// Runs body(i) for i in [begin, end) with a static partition. Bodies must
// write only to index-owned outputs so results do not depend on the
// worker count.
void ParallelFor(int64_t begin, int64_t end,
                 const std::function<void(int64_t)>& body);

}  // namespace mvsflow
