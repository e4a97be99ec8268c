#include "subchain/parallel.hpp"

#include <cstdlib>
#include <string>

namespace subchain {

int max_workers() {
#ifdef _OPENMP
  int workers = omp_get_max_threads();
  if (const char* env = std::getenv("SUBCHAIN_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1 && cap < workers) workers = cap;
    } catch (...) {
      // unparsable cap: keep the OpenMP default
    }
  }
  return workers < 1 ? 1 : workers;
#else
  return 1;
#endif
}

}  // namespace subchain
