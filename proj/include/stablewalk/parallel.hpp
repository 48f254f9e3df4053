#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stablewalk {

inline int resolve_workers(int workers) {
#ifdef _OPENMP
  return workers > 0 ? workers : omp_get_max_threads();
#else
  (void)workers;
  return 1;
#endif
}

// OpenMP loop over [0, count). fn(i) must write only to its own slot(s);
// floating-point reductions belong in a serial pass afterwards. Integer
// accumulation across threads is fine (order-independent).
template <class Fn>
void parallel_for_index(std::int64_t count, int workers, Fn&& fn) {
#ifdef _OPENMP
  const int nt = resolve_workers(workers);
#pragma omp parallel for schedule(dynamic, 64) num_threads(nt)
  for (std::int64_t i = 0; i < count; ++i) fn(i);
#else
  (void)workers;
  for (std::int64_t i = 0; i < count; ++i) fn(i);
#endif
}

// Plain loop with the same contract; the reference the tests compare against.
template <class Fn>
void serial_for_index(std::int64_t count, Fn&& fn) {
  for (std::int64_t i = 0; i < count; ++i) fn(i);
}

// Neumaier-compensated sum over a slot array; the serial reduction used after
// parallel fills so totals do not depend on the thread partition.
inline double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

}  // namespace stablewalk
