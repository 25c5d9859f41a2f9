#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nss {

// Execution backend for the embarrassingly parallel kernels (grid scans,
// Monte-Carlo trials, sweep tables). Every parallel loop writes only to
// disjoint output slots and all reductions run serially afterwards, so the
// two modes produce bit-identical results; tests assert this.
enum class ExecMode { serial, openmp };

namespace detail {
inline ExecMode& exec_mode_ref() {
  static ExecMode mode = ExecMode::openmp;
  return mode;
}
}  // namespace detail

inline void set_exec_mode(ExecMode m) { detail::exec_mode_ref() = m; }
inline ExecMode exec_mode() { return detail::exec_mode_ref(); }

// Thread cap: min(hardware, NSS_ORTHO_THREADS if set). Read once.
inline int max_threads() {
  static const int cap = [] {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("NSS_ORTHO_THREADS")) {
      int requested = std::atoi(env);
      if (requested > 0 && requested < n) n = requested;
    }
    return n < 1 ? 1 : n;
  }();
  return cap;
}

// Runs fn(i) for i in [0, n). OpenMP mode uses a static schedule; fn must
// only write state owned by index i.
template <typename Fn>
void parallel_for(long n, Fn&& fn) {
  if (n <= 0) return;
#ifdef _OPENMP
  if (exec_mode() == ExecMode::openmp && n > 1) {
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  for (long i = 0; i < n; ++i) fn(i);
}

inline std::string exec_mode_name() {
  return exec_mode() == ExecMode::serial ? "serial" : "openmp";
}

}  // namespace nss
