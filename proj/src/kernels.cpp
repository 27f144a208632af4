#include "somix/kernels.hpp"

#include <atomic>
#include <cmath>
#include <vector>

namespace somix::kernels {

namespace {
std::atomic<bool> g_parallel{true};

// Per-row matmul body shared by the serial and parallel variants. Keeping a
// single definition is what guarantees bit-identical results.
inline void mm_row(const double* a, bool ta, const double* b, bool tb,
                   double* c, std::size_t i, std::size_t n, std::size_t k,
                   std::size_t m, bool accumulate) {
  double* crow = c + i * m;
  if (!accumulate)
    for (std::size_t j = 0; j < m; ++j) crow[j] = 0.0;
  if (!ta && !tb) {
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  } else if (!ta && tb) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = b + j * k;
      double acc = crow[j];
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[p * n + i];
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  } else {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[p * n + i];
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * b[j * k + p];
    }
  }
}
}  // namespace

void set_parallel(bool on) { g_parallel.store(on); }
bool parallel_enabled() { return g_parallel.load(); }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void mm_serial(const double* a, bool ta, const double* b, bool tb, double* c,
               std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
  for (std::size_t i = 0; i < n; ++i) mm_row(a, ta, b, tb, c, i, n, k, m, accumulate);
}

void mm_parallel(const double* a, bool ta, const double* b, bool tb, double* c,
                 std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    mm_row(a, ta, b, tb, c, static_cast<std::size_t>(i), n, k, m, accumulate);
#else
  mm_serial(a, ta, b, tb, c, n, k, m, accumulate);
#endif
}

void mm(const double* a, bool ta, const double* b, bool tb, double* c,
        std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
  if (parallel_enabled() && n > 1 && n * k * m >= detail::mm_parallel_min_work)
    mm_parallel(a, ta, b, tb, c, n, k, m, accumulate);
  else
    mm_serial(a, ta, b, tb, c, n, k, m, accumulate);
}

namespace {
inline double chunk_sum(const double* x, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += x[i];
  return s;
}
}  // namespace

double reduce_sum_serial(const double* x, std::size_t n) {
  const std::size_t nchunks = (n + reduce_chunk - 1) / reduce_chunk;
  double total = 0.0;
  for (std::size_t c = 0; c < nchunks; ++c)
    total += chunk_sum(x, c * reduce_chunk, std::min(n, (c + 1) * reduce_chunk));
  return total;
}

double reduce_sum_parallel(const double* x, std::size_t n) {
#ifdef _OPENMP
  const std::size_t nchunks = (n + reduce_chunk - 1) / reduce_chunk;
  if (nchunks <= 1) return reduce_sum_serial(x, n);
  std::vector<double> partial(nchunks);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    const std::size_t cc = static_cast<std::size_t>(c);
    partial[cc] = chunk_sum(x, cc * reduce_chunk,
                            std::min(n, (cc + 1) * reduce_chunk));
  }
  double total = 0.0;
  for (std::size_t c = 0; c < nchunks; ++c) total += partial[c];
  return total;
#else
  return reduce_sum_serial(x, n);
#endif
}

double reduce_sum(const double* x, std::size_t n) {
  if (parallel_enabled() && n >= 2 * reduce_chunk)
    return reduce_sum_parallel(x, n);
  return reduce_sum_serial(x, n);
}

bool all_finite_serial(const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

bool all_finite_parallel(const double* x, std::size_t n) {
#ifdef _OPENMP
  bool ok = true;
#pragma omp parallel for schedule(static) reduction(&& : ok)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    ok = ok && std::isfinite(x[static_cast<std::size_t>(i)]);
  return ok;
#else
  return all_finite_serial(x, n);
#endif
}

bool all_finite(const double* x, std::size_t n) {
  if (parallel_enabled() && n >= detail::map_parallel_min)
    return all_finite_parallel(x, n);
  return all_finite_serial(x, n);
}

}  // namespace somix::kernels
