#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace subchain {

// Sampling, trial, and restart loops are independent across indices (each
// index derives its own RNG sub-seed and writes only its own slot), so they
// run under OpenMP. The serial path is kept as the reference implementation;
// tests assert both produce identical bits and the bench target compares
// their throughput.
enum class Exec { serial, parallel };

// Worker count for the parallel path: OpenMP's max, capped by the
// SUBCHAIN_THREADS environment variable when set. Always 1 without OpenMP.
int max_workers();

template <typename Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  const int workers = max_workers();
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) num_threads(workers)
  for (long long i = 0; i < count; ++i)
    body(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace subchain
