#pragma once

// Noise-level and mixing-weight sampling for training, plus the
// preconditioning coefficients tied to the noise level.

#include <cstdint>
#include <cstddef>

#include "somix/rng.hpp"

namespace somix {

struct NoiseSchedule {
  double sigma_min = 0.01;
  double sigma_max = 5.0;
  double log_mean = -1.2;  // mean of log(sigma)
  double log_std = 1.2;    // stddev of log(sigma)

  void validate() const;
  // exp(N(log_mean, log_std^2)) clamped into [sigma_min, sigma_max]
  double sample(Rng& rng) const;
};

struct EdmCoefficients {
  double c_skip;
  double c_out;
};

// c_skip = sd^2/(s^2+sd^2), c_out = s*sd/sqrt(s^2+sd^2)
EdmCoefficients edm_coefficients(double sigma, double sigma_data);

// Denoiser-loss weight 1/c_out^2 = (s^2+sd^2)/(s*sd)^2.
double edm_loss_weight(double sigma, double sigma_data);

// Mixing weights live on the uniform grid k/(grid_points-1), k=0..grid_points-1.
// Generator updates never see alpha = 0 (the update direction divides by
// alpha); score updates additionally force a zero_fraction share of exact
// zeros so the alpha = 0 slice stays well trained.
struct AlphaSampler {
  std::size_t grid_points = 1000;
  double zero_fraction = 0.25;

  void validate() const;
  double grid_value(std::size_t k) const;
  double grid_step() const;
  double sample_generator(Rng& rng) const;  // uniform over grid minus {0}
  double sample_score(Rng& rng) const;      // zero_fraction at 0, else uniform over grid
};

// Wherever log(alpha/(1-alpha)) enters a formula, alpha is first clamped to
// [1e-3, 1-1e-3] to keep the offset finite.
double clamp_alpha_for_logit(double alpha);
double logit_offset(double alpha);

}  // namespace somix
