#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bxt {

// Worker count for the OpenMP kernels: requested value, or the machine
// parallelism when requested <= 0.
inline int resolve_threads(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

} // namespace bxt
