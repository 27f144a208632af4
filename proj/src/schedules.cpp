#include "somix/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace somix {

void NoiseSchedule::validate() const {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min))
    throw std::invalid_argument("NoiseSchedule: need 0 < sigma_min < sigma_max");
  if (log_std < 0.0) throw std::invalid_argument("NoiseSchedule: log_std must be nonnegative");
}

double NoiseSchedule::sample(Rng& rng) const {
  const double s = std::exp(rng.normal(log_mean, log_std));
  return std::clamp(s, sigma_min, sigma_max);
}

EdmCoefficients edm_coefficients(double sigma, double sigma_data) {
  if (sigma <= 0.0 || sigma_data <= 0.0)
    throw std::invalid_argument("edm_coefficients: sigma and sigma_data must be positive");
  const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
  return {d2 / (s2 + d2), sigma * sigma_data / std::sqrt(s2 + d2)};
}

double edm_loss_weight(double sigma, double sigma_data) {
  const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
  return (s2 + d2) / (s2 * d2);
}

void AlphaSampler::validate() const {
  if (grid_points < 2) throw std::invalid_argument("AlphaSampler: need at least 2 grid points");
  if (zero_fraction < 0.0 || zero_fraction > 1.0)
    throw std::invalid_argument("AlphaSampler: zero_fraction must be in [0,1]");
}

double AlphaSampler::grid_value(std::size_t k) const {
  if (k >= grid_points) throw std::invalid_argument("AlphaSampler: grid index out of range");
  return static_cast<double>(k) / static_cast<double>(grid_points - 1);
}

double AlphaSampler::grid_step() const { return 1.0 / static_cast<double>(grid_points - 1); }

double AlphaSampler::sample_generator(Rng& rng) const {
  return grid_value(1 + rng.index(grid_points - 1));
}

double AlphaSampler::sample_score(Rng& rng) const {
  if (rng.uniform() < zero_fraction) return 0.0;
  return grid_value(rng.index(grid_points));
}

double clamp_alpha_for_logit(double alpha) { return std::clamp(alpha, 1e-3, 1.0 - 1e-3); }

double logit_offset(double alpha) {
  const double a = clamp_alpha_for_logit(alpha);
  return std::log(a / (1.0 - a));
}

}  // namespace somix
