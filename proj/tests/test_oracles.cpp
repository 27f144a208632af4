#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "somix/oracles.hpp"
#include "somix/rng.hpp"

using namespace somix;
using oracles::GaussianMixture;

namespace {

constexpr double pi = 3.14159265358979323846;

GaussianMixture demo_mixture() {
  return GaussianMixture({0.3, 0.7}, {{0.5, -1.0}, {-0.8, 0.6}}, {0.4, 1.1});
}

}  // namespace

TEST_CASE("single-Gaussian density and score match closed forms") {
  const GaussianMixture g({1.0}, {{1.0, -2.0}}, {0.5});
  const double x[2] = {0.3, -1.1};
  const double r2 = (0.3 - 1.0) * (0.3 - 1.0) + (-1.1 + 2.0) * (-1.1 + 2.0);
  const double expect = -0.5 * r2 / 0.5 - std::log(2.0 * pi * 0.5);
  CHECK(oracles::log_density(g, x) == doctest::Approx(expect).epsilon(1e-14));
  const auto s = oracles::score(g, x);
  CHECK(s[0] == doctest::Approx(-(0.3 - 1.0) / 0.5).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(-(-1.1 + 2.0) / 0.5).epsilon(1e-14));
}

TEST_CASE("mixture score equals the finite-difference gradient") {
  const auto gm = demo_mixture();
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const std::vector<double> x{rng.normal(0.0, 1.5), rng.normal(0.0, 1.5)};
    const auto fd = oracles::finite_diff_grad(
        [&](const std::vector<double>& v) { return oracles::log_density(gm, v.data()); }, x);
    const auto an = oracles::score(gm, x.data());
    for (int j = 0; j < 2; ++j) CHECK(an[j] == doctest::Approx(fd[j]).epsilon(1e-6));
  }
}

TEST_CASE("convolve shifts every component variance by sigma^2") {
  const auto gm = demo_mixture();
  const auto noised = oracles::convolve(gm, 0.7);
  REQUIRE(noised.components() == gm.components());
  for (std::size_t k = 0; k < gm.components(); ++k) {
    CHECK(noised.variances[k] == doctest::Approx(gm.variances[k] + 0.49));
    CHECK(noised.weights[k] == gm.weights[k]);
    CHECK(noised.means[k] == gm.means[k]);
  }
  // Noised samples follow the convolved density: compare moments in 1-D.
  const GaussianMixture g1({0.4, 0.6}, {{-1.0}, {2.0}}, {0.2, 0.9});
  Rng rng(22);
  double m1 = 0.0, m2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = oracles::sample(g1, rng)[0] + 0.7 * rng.normal();
    m1 += v;
    m2 += v * v;
  }
  m1 /= n;
  m2 = m2 / n - m1 * m1;
  const auto g1n = oracles::convolve(g1, 0.7);
  double em = 0.0, ev = 0.0;
  for (std::size_t k = 0; k < g1n.components(); ++k) em += g1n.weights[k] * g1n.means[k][0];
  for (std::size_t k = 0; k < g1n.components(); ++k)
    ev += g1n.weights[k] * (g1n.variances[k] + g1n.means[k][0] * g1n.means[k][0]);
  ev -= em * em;
  CHECK(m1 == doctest::Approx(em).epsilon(0.02));
  CHECK(m2 == doctest::Approx(ev).epsilon(0.02));
}

TEST_CASE("mix weights the densities and drops zero-weight sides") {
  const auto p = demo_mixture();
  const GaussianMixture q({1.0}, {{0.0, 0.0}}, {2.0});
  const double x[2] = {0.4, 0.2};
  const double lp = oracles::log_density(p, x), lq = oracles::log_density(q, x);
  for (const double a : {0.25, 0.5, 0.9}) {
    const double lm = oracles::mixture_log_density(p, q, a, x);
    CHECK(lm == doctest::Approx(std::log(a * std::exp(lp) + (1.0 - a) * std::exp(lq)))
                    .epsilon(1e-12));
    const auto m = oracles::mix(p, q, a);
    CHECK(oracles::log_density(m, x) == doctest::Approx(lm).epsilon(1e-12));
  }
  CHECK(oracles::mix(p, q, 0.0).components() == q.components());
  CHECK(oracles::mix(p, q, 1.0).components() == p.components());
  CHECK(oracles::mixture_log_density(p, q, 0.0, x) == doctest::Approx(lq).epsilon(1e-12));
  CHECK(oracles::mixture_log_density(p, q, 1.0, x) == doctest::Approx(lp).epsilon(1e-12));
}

TEST_CASE("posterior mean has the conjugate closed form for one Gaussian") {
  const GaussianMixture g({1.0}, {{1.5, -0.5}}, {0.8});
  const double sig = 0.6;
  const double xt[2] = {2.0, 0.3};
  const auto pm = oracles::posterior_mean(g, xt, sig);
  for (int j = 0; j < 2; ++j) {
    const double expect = (0.8 * xt[j] + sig * sig * g.means[0][j]) / (0.8 + sig * sig);
    CHECK(pm[j] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("posterior mean obeys the noised-score identity") {
  const auto gm = demo_mixture();
  Rng rng(23);
  for (int t = 0; t < 10; ++t) {
    const double sig = rng.uniform(0.1, 1.5);
    const double xt[2] = {rng.normal(0.0, 2.0), rng.normal(0.0, 2.0)};
    const auto pm = oracles::posterior_mean(gm, xt, sig);
    const auto sc = oracles::score(oracles::convolve(gm, sig), xt);
    for (int j = 0; j < 2; ++j)
      CHECK(pm[j] == doctest::Approx(xt[j] + sig * sig * sc[j]).epsilon(1e-10));
  }
}

TEST_CASE("cdf matches the density and samples match the cdf") {
  const GaussianMixture g({0.5, 0.5}, {{-1.0}, {1.0}}, {0.3, 0.3});
  CHECK(oracles::cdf_1d(g, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(oracles::cdf_1d(g, -50.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(oracles::cdf_1d(g, 50.0) == doctest::Approx(1.0).epsilon(1e-12));
  // d/dx cdf == density
  const double x0 = 0.4, h = 1e-5;
  const double dens = std::exp(oracles::log_density(g, &x0));
  CHECK((oracles::cdf_1d(g, x0 + h) - oracles::cdf_1d(g, x0 - h)) / (2 * h) ==
        doctest::Approx(dens).epsilon(1e-6));

  // Kolmogorov-Smirnov against the exact cdf.
  Rng rng(24);
  const std::size_t n = 20000;
  std::vector<double> s(n);
  oracles::sample_n(g, rng, n, s.data());
  std::sort(s.begin(), s.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = oracles::cdf_1d(g, s[i]);
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
  }
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));  // ~1% point of the KS statistic
}

TEST_CASE("finite differences are near-exact on a quadratic") {
  const auto fd = oracles::finite_diff_grad(
      [](const std::vector<double>& v) { return 3.0 * v[0] * v[0] - 2.0 * v[0] * v[1]; },
      {1.0, 2.0});
  CHECK(fd[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fd[1] == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("mixture construction rejects malformed parameters") {
  CHECK_THROWS(GaussianMixture({0.5, 0.6}, {{0.0}, {1.0}}, {1.0, 1.0}));   // weights not normal
  CHECK_THROWS(GaussianMixture({0.5, 0.5}, {{0.0}, {1.0, 2.0}}, {1.0, 1.0}));  // ragged means
  CHECK_THROWS(GaussianMixture({0.5, 0.5}, {{0.0}, {1.0}}, {1.0, -1.0}));  // bad variance
  CHECK_THROWS(GaussianMixture({}, {}, {}));
}
