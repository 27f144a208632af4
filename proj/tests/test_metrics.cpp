#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "somix/data.hpp"
#include "somix/metrics.hpp"
#include "somix/rng.hpp"

using namespace somix;

namespace {

std::vector<double> gauss_cloud(std::size_t n, std::size_t dim, Rng& rng, double shift = 0.0) {
  std::vector<double> v(n * dim);
  for (auto& x : v) x = rng.normal() + shift;
  return v;
}

}  // namespace

TEST_CASE("energy distance vanishes on identical sets and is symmetric") {
  Rng rng(71);
  const auto a = gauss_cloud(300, 2, rng);
  const auto b = gauss_cloud(200, 2, rng, 0.5);
  CHECK(metrics::energy_distance(a.data(), 300, a.data(), 300, 2) == 0.0);
  const double ab = metrics::energy_distance(a.data(), 300, b.data(), 200, 2);
  const double ba = metrics::energy_distance(b.data(), 200, a.data(), 300, 2);
  CHECK(std::abs(ab - ba) <= 1e-12 * std::max(1.0, std::abs(ab)));
  CHECK(ab > 0.0);
}

TEST_CASE("energy distance of two point masses is twice their separation") {
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{3.0, 4.0};  // r = 5
  CHECK(metrics::energy_distance(a.data(), 1, b.data(), 1, 2) == doctest::Approx(10.0));
}

TEST_CASE("both metrics scale linearly with the point coordinates") {
  Rng rng(72);
  auto a = gauss_cloud(150, 2, rng);
  auto b = gauss_cloud(170, 2, rng, 0.8);
  const double e1 = metrics::energy_distance(a.data(), 150, b.data(), 170, 2);
  const double s1 = metrics::sliced_wasserstein(a.data(), 150, b.data(), 170, 2, 64, 5);
  for (auto& v : a) v *= 2.5;
  for (auto& v : b) v *= 2.5;
  const double e2 = metrics::energy_distance(a.data(), 150, b.data(), 170, 2);
  const double s2 = metrics::sliced_wasserstein(a.data(), 150, b.data(), 170, 2, 64, 5);
  CHECK(e2 == doctest::Approx(2.5 * e1).epsilon(1e-9));
  CHECK(s2 == doctest::Approx(2.5 * s1).epsilon(1e-9));
}

TEST_CASE("matched samples stay below the pooled-resample 99th percentile") {
  Rng rng(73);
  const std::size_t n = 4000;
  const auto a = gauss_cloud(n, 2, rng);
  const auto b = gauss_cloud(n, 2, rng);
  const double observed = metrics::energy_distance(a.data(), n, b.data(), n, 2);

  // Pool and re-split; the observed statistic should look like a typical
  // draw from this null distribution.
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  std::vector<double> xs(n * 2), ys(n * 2);
  std::vector<std::size_t> idx(2 * n);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<double> null_values;
  Rng perm(74);
  for (int rep = 0; rep < 50; ++rep) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[perm.index(i)]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        xs[i * 2 + j] = pool[idx[i] * 2 + j];
        ys[i * 2 + j] = pool[idx[n + i] * 2 + j];
      }
    null_values.push_back(metrics::energy_distance(xs.data(), n, ys.data(), n, 2));
  }
  std::sort(null_values.begin(), null_values.end());
  CHECK(observed < null_values[49]);  // ~99th percentile of 50 resamples

  // And a genuinely shifted pair lands far above it.
  const auto c = gauss_cloud(n, 2, rng, 1.0);
  CHECK(metrics::energy_distance(a.data(), n, c.data(), n, 2) > 10.0 * null_values[49]);
}

TEST_CASE("1-d optimal transport handles equal and unequal sample counts") {
  CHECK(metrics::wasserstein1_1d({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  // Pure shift: cost equals the shift.
  CHECK(metrics::wasserstein1_1d({0.0, 1.0, 5.0}, {2.0, 3.0, 7.0}) == doctest::Approx(2.0));
  // Unequal counts via the quantile overlap: a = {0,1}, b = {0.5}.
  CHECK(metrics::wasserstein1_1d({0.0, 1.0}, {0.5}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(metrics::wasserstein1_1d({0.0}, {1.0, 1.0}) == doctest::Approx(1.0));
  // Order of arguments is irrelevant.
  Rng rng(75);
  std::vector<double> a(33), b(57);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal(0.3, 1.2);
  CHECK(metrics::wasserstein1_1d(a, b) == doctest::Approx(metrics::wasserstein1_1d(b, a)).epsilon(1e-12));
}

TEST_CASE("sliced distance is seed-deterministic and exact for 1-d shifts") {
  Rng rng(76);
  const auto a = gauss_cloud(100, 3, rng);
  const auto b = gauss_cloud(100, 3, rng, 0.4);
  const double s1 = metrics::sliced_wasserstein(a.data(), 100, b.data(), 100, 3, 32, 9);
  const double s2 = metrics::sliced_wasserstein(a.data(), 100, b.data(), 100, 3, 32, 9);
  CHECK(s1 == s2);
  const double s3 = metrics::sliced_wasserstein(a.data(), 100, b.data(), 100, 3, 32, 10);
  CHECK(s1 != s3);
  CHECK(metrics::sliced_wasserstein(a.data(), 100, a.data(), 100, 3, 32, 9) == 0.0);

  // In one dimension every unit projection is +-1, so a shift comes out
  // exactly.
  std::vector<double> u(50), v(50);
  for (std::size_t i = 0; i < 50; ++i) {
    u[i] = static_cast<double>(i) * 0.01;
    v[i] = u[i] + 0.7;
  }
  CHECK(metrics::sliced_wasserstein(u.data(), 50, v.data(), 50, 1, 16, 3) ==
        doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("nearest-neighbor spacing and the within-radius fractions") {
  // 4x4 unit grid: every nearest neighbor is at distance 1.
  std::vector<double> grid;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      grid.push_back(i);
      grid.push_back(j);
    }
  CHECK(metrics::median_nn_spacing(grid.data(), 16, 2) == doctest::Approx(1.0));

  const std::vector<double> probe{0.2, 0.0, 10.0, 10.0};
  CHECK(metrics::fraction_within(probe.data(), 2, grid.data(), 16, 2, 0.5) ==
        doctest::Approx(0.5));
  CHECK(metrics::fraction_within(grid.data(), 16, grid.data(), 16, 2, 0.1) == doctest::Approx(1.0));
  CHECK(metrics::fraction_within(probe.data(), 1, grid.data(), 16, 2, 0.05) == doctest::Approx(0.0));
}

TEST_CASE("evaluation report carries all fields and sane ranges") {
  const auto ref = data::swiss_roll(800, 0.05, 0.0, 77);
  Rng rng(78);
  const auto noise = gauss_cloud(400, 2, rng);
  const auto rep = metrics::evaluate(noise.data(), 400, ref.train.data(), 800, 2, 32, 1);
  CHECK(rep.energy > 0.0);
  CHECK(rep.sliced_w > 0.0);
  CHECK(rep.coverage >= 0.0);
  CHECK(rep.coverage <= 1.0);
  CHECK(rep.adherence >= 0.0);
  CHECK(rep.adherence <= 1.0);
  CHECK(rep.delta > 0.0);
  CHECK(rep.n_generated == 400);
  CHECK(rep.n_reference == 800);
  const auto j = rep.to_json();
  for (const char* key : {"energy_distance", "sliced_wasserstein", "coverage", "adherence",
                          "delta", "n_generated", "n_reference", "n_projections",
                          "projection_seed"})
    CHECK(j.contains(key));

  // The data against a fresh draw of itself scores near-perfect coverage.
  const auto ref2 = data::swiss_roll(800, 0.05, 0.0, 79);
  const auto self = metrics::evaluate(ref2.train.data(), 800, ref.train.data(), 800, 2, 32, 1);
  CHECK(self.coverage > 0.95);
  CHECK(self.adherence > 0.95);
  CHECK(self.energy < rep.energy);
}
