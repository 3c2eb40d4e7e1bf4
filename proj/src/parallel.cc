#include "mvsflow/parallel.h"

#include <omp.h>

namespace mvsflow {
namespace {
int g_num_threads = 0;
}

void SetNumThreads(int num_threads) {
  g_num_threads = num_threads;
  omp_set_num_threads(num_threads > 0 ? num_threads : omp_get_num_procs());
}

int GetNumThreads() {
  return g_num_threads > 0 ? g_num_threads : omp_get_max_threads();
}

void ParallelFor(int64_t begin, int64_t end,
                 const std::function<void(int64_t)>& body) {
#pragma omp parallel for schedule(static) num_threads(GetNumThreads())
  for (int64_t i = begin; i < end; ++i) {
    body(i);
  }
}

}  // namespace mvsflow
