#include "somix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "somix/kernels.hpp"
#include "somix/rng.hpp"

namespace somix::metrics {

namespace {

// Compensated accumulator; keeps million-term sums reproducible to a few ulps
// so the symmetry guarantee holds at 1e-12.
struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

double dist(const double* x, const double* y, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// mean_{i,j} ||a_i - b_j|| with per-row compensated partials combined in
// index order.
double mean_cross_distance(const double* a, std::size_t n, const double* b, std::size_t m,
                           std::size_t dim) {
  std::vector<double> row(n);
  kernels::for_rows(n, [&](std::size_t i) {
    Kahan acc;
    const double* ai = a + i * dim;
    for (std::size_t j = 0; j < m; ++j) acc.add(dist(ai, b + j * dim, dim));
    row[i] = acc.sum;
  });
  Kahan total;
  for (double r : row) total.add(r);
  return total.sum / (static_cast<double>(n) * static_cast<double>(m));
}

}  // namespace

double energy_distance(const double* a, std::size_t n, const double* b, std::size_t m,
                       std::size_t dim) {
  if (n == 0 || m == 0 || dim == 0)
    throw std::invalid_argument("energy_distance: empty sample set");
  const double cross = mean_cross_distance(a, n, b, m, dim);
  const double within_a = mean_cross_distance(a, n, a, n, dim);
  const double within_b = mean_cross_distance(b, m, b, m, dim);
  return 2.0 * cross - within_a - within_b;
}

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    Kahan acc;
    for (std::size_t i = 0; i < a.size(); ++i) acc.add(std::abs(a[i] - b[i]));
    return acc.sum / static_cast<double>(a.size());
  }
  // integral of |F_a - F_b| over the merged breakpoints
  const double wa = 1.0 / static_cast<double>(a.size());
  const double wb = 1.0 / static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, prev = 0.0;
  bool first = true;
  Kahan acc;
  while (i < a.size() || j < b.size()) {
    const double t = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    if (!first) acc.add(std::abs(fa - fb) * (t - prev));
    while (i < a.size() && a[i] == t) {
      fa += wa;
      ++i;
    }
    while (j < b.size() && b[j] == t) {
      fb += wb;
      ++j;
    }
    prev = t;
    first = false;
  }
  return acc.sum;
}

double sliced_wasserstein(const double* a, std::size_t n, const double* b, std::size_t m,
                          std::size_t dim, std::size_t n_projections, std::uint64_t seed) {
  if (n == 0 || m == 0 || dim == 0)
    throw std::invalid_argument("sliced_wasserstein: empty sample set");
  if (n_projections == 0) throw std::invalid_argument("sliced_wasserstein: need a projection");
  // Directions are drawn up front so the parallel section owns no rng.
  std::vector<double> dirs(n_projections * dim);
  Rng rng(seed);
  for (std::size_t p = 0; p < n_projections; ++p) {
    double norm = 0.0;
    while (norm == 0.0) {
      for (std::size_t k = 0; k < dim; ++k) dirs[p * dim + k] = rng.normal();
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += dirs[p * dim + k] * dirs[p * dim + k];
      norm = std::sqrt(s);
    }
    for (std::size_t k = 0; k < dim; ++k) dirs[p * dim + k] /= norm;
  }
  std::vector<double> w1(n_projections);
  kernels::for_rows(n_projections, [&](std::size_t p) {
    const double* u = dirs.data() + p * dim;
    std::vector<double> pa(n), pb(m);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += a[i * dim + k] * u[k];
      pa[i] = s;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += b[j * dim + k] * u[k];
      pb[j] = s;
    }
    w1[p] = wasserstein1_1d(std::move(pa), std::move(pb));
  });
  Kahan acc;
  for (double v : w1) acc.add(v);
  return acc.sum / static_cast<double>(n_projections);
}

double median_nn_spacing(const double* x, std::size_t n, std::size_t dim) {
  if (n < 2) throw std::invalid_argument("median_nn_spacing: need at least two points");
  std::vector<double> nn(n);
  kernels::for_rows(n, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, dist(x + i * dim, x + j * dim, dim));
    }
    nn[i] = best;
  });
  std::sort(nn.begin(), nn.end());
  return n % 2 ? nn[n / 2] : 0.5 * (nn[n / 2 - 1] + nn[n / 2]);
}

double fraction_within(const double* a, std::size_t na, const double* b, std::size_t nb,
                       std::size_t dim, double delta) {
  if (na == 0 || nb == 0) throw std::invalid_argument("fraction_within: empty sample set");
  const double d2 = delta * delta;
  std::vector<unsigned char> hit(na, 0);
  kernels::for_rows(na, [&](std::size_t i) {
    for (std::size_t j = 0; j < nb; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = a[i * dim + k] - b[j * dim + k];
        s += d * d;
      }
      if (s <= d2) {
        hit[i] = 1;
        break;
      }
    }
  });
  std::size_t count = 0;
  for (unsigned char h : hit) count += h;
  return static_cast<double>(count) / static_cast<double>(na);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j{{"energy_distance", energy},
                   {"sliced_wasserstein", sliced_w},
                   {"coverage", coverage},
                   {"adherence", adherence},
                   {"delta", delta},
                   {"n_generated", n_generated},
                   {"n_reference", n_reference},
                   {"n_projections", n_projections},
                   {"projection_seed", projection_seed}};
  if (baseline_energy >= 0.0) j["baseline_energy"] = baseline_energy;
  return j;
}

EvalReport evaluate(const double* generated, std::size_t n_gen, const double* reference,
                    std::size_t n_ref, std::size_t dim, std::size_t n_projections,
                    std::uint64_t seed) {
  EvalReport r;
  r.n_generated = n_gen;
  r.n_reference = n_ref;
  r.n_projections = n_projections;
  r.projection_seed = seed;
  r.energy = energy_distance(generated, n_gen, reference, n_ref, dim);
  r.sliced_w = sliced_wasserstein(generated, n_gen, reference, n_ref, dim, n_projections, seed);
  r.delta = 3.0 * median_nn_spacing(reference, n_ref, dim);
  r.coverage = fraction_within(reference, n_ref, generated, n_gen, dim, r.delta);
  r.adherence = fraction_within(generated, n_gen, reference, n_ref, dim, r.delta);
  return r;
}

}  // namespace somix::metrics
