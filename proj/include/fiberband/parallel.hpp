#pragma once

#include <cstddef>
#include <exception>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fiberband {

// Execution policy for the sweep kernels. The serial path is the reference
// implementation; the OpenMP path must produce bit-identical results, which
// holds because every loop body writes only to its own output slot.
struct ExecPolicy {
  bool parallel = true;
  int jobs = 0;  // 0: runtime default

  static ExecPolicy serial() { return {false, 1}; }
  static ExecPolicy openmp(int jobs = 0) { return {true, jobs}; }
};

template <class F>
void parallel_for(std::size_t n, const ExecPolicy& exec, F&& body) {
#ifdef _OPENMP
  if (exec.parallel && n > 1) {
    // Exceptions cannot cross the omp region; capture per index and rethrow
    // the lowest one so failure behavior matches the serial path.
    std::vector<std::exception_ptr> errs(n);
    const int jobs = exec.jobs > 0 ? exec.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errs[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
    return;
  }
#endif
  (void)exec;
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace fiberband
