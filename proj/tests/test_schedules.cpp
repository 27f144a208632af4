#include <doctest.h>

#include <cmath>
#include <set>

#include "somix/schedules.hpp"

using namespace somix;

TEST_CASE("preconditioning coefficients satisfy their defining identities") {
  for (const double sd : {0.5, 1.0, 1.7}) {
    for (const double s : {0.01, 0.3, 1.0, 5.0}) {
      const auto c = edm_coefficients(s, sd);
      CHECK(c.c_skip == doctest::Approx(sd * sd / (s * s + sd * sd)).epsilon(1e-14));
      CHECK(c.c_out == doctest::Approx(s * sd / std::sqrt(s * s + sd * sd)).epsilon(1e-14));
      // Variance split: c_skip^2 (s^2+sd^2) + c_out^2 == sd^2 keeps the
      // denoiser output at data scale for any noise level.
      CHECK(c.c_skip * c.c_skip * (s * s + sd * sd) + c.c_out * c.c_out ==
            doctest::Approx(sd * sd).epsilon(1e-12));
      CHECK(edm_loss_weight(s, sd) == doctest::Approx(1.0 / (c.c_out * c.c_out)).epsilon(1e-12));
    }
  }
  // Low noise: passthrough dominates. High noise: skip fades out.
  CHECK(edm_coefficients(1e-4, 0.5).c_skip > 0.999);
  CHECK(edm_coefficients(100.0, 0.5).c_skip < 1e-4);
}

TEST_CASE("noise draws respect the clamp range and the log-normal center") {
  NoiseSchedule ns;
  Rng rng(31);
  double lo = 1e9, hi = 0.0, log_sum = 0.0;
  int interior = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double s = ns.sample(rng);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    if (s > ns.sigma_min && s < ns.sigma_max) {
      log_sum += std::log(s);
      ++interior;
    }
  }
  CHECK(lo >= ns.sigma_min);
  CHECK(hi <= ns.sigma_max);
  CHECK(static_cast<double>(interior) / n > 0.9);
  // Interior draws keep roughly the configured log-mean (clamping trims
  // both tails, min more than max, so allow a generous band).
  CHECK(std::abs(log_sum / interior - ns.log_mean) < 0.1);

  NoiseSchedule bad;
  bad.sigma_min = -1.0;
  CHECK_THROWS(bad.validate());
  bad = NoiseSchedule{};
  bad.sigma_max = bad.sigma_min / 2.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("mixing weights live on the grid with the advertised composition") {
  AlphaSampler as;
  CHECK(as.grid_value(0) == 0.0);
  CHECK(as.grid_value(as.grid_points - 1) == 1.0);
  CHECK(as.grid_step() == doctest::Approx(1.0 / 999.0).epsilon(1e-15));

  Rng rng(32);
  const int n = 200000;
  int zeros = 0;
  double mean_gen = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = as.sample_generator(rng);
    CHECK(g > 0.0);
    mean_gen += g;
    const double s = as.sample_score(rng);
    if (s == 0.0) ++zeros;
    // Both samplers stay on the grid.
    const double kg = g * 999.0, ks = s * 999.0;
    CHECK(std::abs(kg - std::round(kg)) < 1e-9);
    CHECK(std::abs(ks - std::round(ks)) < 1e-9);
  }
  // Uniform over {1/999 .. 1}: mean = 500/999.
  CHECK(mean_gen / n == doctest::Approx(500.0 / 999.0).epsilon(0.005));
  CHECK(static_cast<double>(zeros) / n == doctest::Approx(0.25).epsilon(0.02));

  AlphaSampler bad;
  bad.grid_points = 1;
  CHECK_THROWS(bad.validate());
  bad = AlphaSampler{};
  bad.zero_fraction = 1.5;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("logit offsets are clamped and centered") {
  CHECK(clamp_alpha_for_logit(0.0) == doctest::Approx(1e-3));
  CHECK(clamp_alpha_for_logit(1.0) == doctest::Approx(1.0 - 1e-3));
  CHECK(clamp_alpha_for_logit(0.4) == doctest::Approx(0.4));
  CHECK(logit_offset(0.5) == doctest::Approx(0.0).scale(1.0));
  CHECK(logit_offset(0.75) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(std::isfinite(logit_offset(0.0)));
  CHECK(std::isfinite(logit_offset(1.0)));
}
