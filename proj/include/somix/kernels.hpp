#pragma once

// Dense kernels used by the autodiff layer and the evaluation metrics.
// Every kernel has a serial reference and an OpenMP variant; both compute the
// same arithmetic DAG, so results are bit-identical regardless of thread
// count. Parallel loops only ever split across independent output elements,
// and full reductions go through fixed-size chunk partials combined in index
// order.

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace somix::kernels {

// Globally enable/disable the OpenMP variants (dispatchers fall back to the
// serial reference when off). Default: on.
void set_parallel(bool on);
bool parallel_enabled();
int max_threads();

inline constexpr std::size_t reduce_chunk = 4096;

// C(n x m) = A' * B' where A' = ta ? transpose(a) : a (a stored k x n when
// ta, else n x k) and B' = tb ? transpose(b) : b (b stored m x k when tb,
// else k x m). accumulate adds into c instead of overwriting.
void mm_serial(const double* a, bool ta, const double* b, bool tb, double* c,
               std::size_t n, std::size_t k, std::size_t m, bool accumulate);
void mm_parallel(const double* a, bool ta, const double* b, bool tb, double* c,
                 std::size_t n, std::size_t k, std::size_t m, bool accumulate);
void mm(const double* a, bool ta, const double* b, bool tb, double* c,
        std::size_t n, std::size_t k, std::size_t m, bool accumulate = false);

// Sum of x[0..n) via fixed-size chunk partials, combined in chunk order.
double reduce_sum_serial(const double* x, std::size_t n);
double reduce_sum_parallel(const double* x, std::size_t n);
double reduce_sum(const double* x, std::size_t n);

bool all_finite_serial(const double* x, std::size_t n);
bool all_finite_parallel(const double* x, std::size_t n);
bool all_finite(const double* x, std::size_t n);

namespace detail {
inline constexpr std::size_t map_parallel_min = 1 << 15;
inline constexpr std::size_t mm_parallel_min_work = 1 << 16;
}  // namespace detail

// y[i] = f(x[i])
template <class F>
void map_serial(const double* x, double* y, std::size_t n, F f) {
  for (std::size_t i = 0; i < n; ++i) y[i] = f(x[i]);
}

template <class F>
void map_parallel(const double* x, double* y, std::size_t n, F f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    y[i] = f(x[static_cast<std::size_t>(i)]);
#else
  map_serial(x, y, n, f);
#endif
}

template <class F>
void map(const double* x, double* y, std::size_t n, F f) {
  if (parallel_enabled() && n >= detail::map_parallel_min)
    map_parallel(x, y, n, f);
  else
    map_serial(x, y, n, f);
}

// y[i] = f(a[i], b[i])
template <class F>
void map2_serial(const double* a, const double* b, double* y, std::size_t n,
                 F f) {
  for (std::size_t i = 0; i < n; ++i) y[i] = f(a[i], b[i]);
}

template <class F>
void map2_parallel(const double* a, const double* b, double* y, std::size_t n,
                   F f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    y[i] = f(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]);
#else
  map2_serial(a, b, y, n, f);
#endif
}

template <class F>
void map2(const double* a, const double* b, double* y, std::size_t n, F f) {
  if (parallel_enabled() && n >= detail::map_parallel_min)
    map2_parallel(a, b, y, n, f);
  else
    map2_serial(a, b, y, n, f);
}

// Row-parallel loop over [0, n): body(i) must only write outputs owned by
// row i.
template <class F>
void for_rows(std::size_t n, F body) {
#ifdef _OPENMP
  if (parallel_enabled() && n > 1) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      body(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace somix::kernels
