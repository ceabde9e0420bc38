#pragma once

// Execution policy shared by the data-parallel kernels. Every kernel has a
// serial reference path; the parallel path must produce bit-identical output.

#if defined(OBJSAMPLE_HAVE_OPENMP)
#include <omp.h>
#endif

namespace objsample {

enum class Exec { serial, parallel };

inline int max_threads() {
#if defined(OBJSAMPLE_HAVE_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline int thread_num() {
#if defined(OBJSAMPLE_HAVE_OPENMP)
  return omp_get_thread_num();
#else
  return 0;
#endif
}

/// Below this many elements the parallel path falls back to serial; the fork
/// costs more than the loop.
inline constexpr long kParallelGrain = 4096;

inline bool use_parallel(Exec exec, long n) {
#if defined(OBJSAMPLE_HAVE_OPENMP)
  return exec == Exec::parallel && n >= kParallelGrain && omp_get_max_threads() > 1;
#else
  (void)exec;
  (void)n;
  return false;
#endif
}

}  // namespace objsample
