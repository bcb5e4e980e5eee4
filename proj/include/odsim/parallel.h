#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace odsim {

// Runs fun(i) for i in [0, ntasks). Tasks are scheduled dynamically on
// `nthreads` OpenMP threads; with nthreads <= 1 (or without OpenMP) the loop
// runs serially in index order.
template <class Index, class Function>
void parallelize(Index ntasks, int nthreads, Function fun) {
#if defined(_OPENMP)
  if (nthreads > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
    for (Index i = 0; i < ntasks; ++i) fun(i);
    return;
  }
#endif
  for (Index i = 0; i < ntasks; ++i) fun(i);
}

inline int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace odsim
