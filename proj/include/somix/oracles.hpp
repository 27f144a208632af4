#pragma once

// Closed-form references used to check the learned models: isotropic Gaussian
// mixtures with exact densities, scores, Gaussian-noise convolution, and
// denoising posterior means, plus central finite differences.

#include <functional>
#include <vector>

#include "somix/rng.hpp"

namespace somix::oracles {

struct GaussianMixture {
  std::vector<double> weights;             // nonnegative, sums to 1
  std::vector<std::vector<double>> means;  // k x d
  std::vector<double> variances;           // isotropic sigma_k^2, positive

  GaussianMixture(std::vector<double> w, std::vector<std::vector<double>> m,
                  std::vector<double> v);

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means[0].size(); }
};

double log_density(const GaussianMixture& gm, const double* x);
std::vector<double> score(const GaussianMixture& gm, const double* x);

// Distribution of x + sigma * eps, eps ~ N(0, I): adds sigma^2 to every
// component variance.
GaussianMixture convolve(const GaussianMixture& gm, double sigma);

// alpha * p + (1 - alpha) * q as one mixture; zero-weight components are
// dropped, so alpha = 0 or 1 returns the surviving side unchanged.
GaussianMixture mix(const GaussianMixture& p, const GaussianMixture& q, double alpha);

double mixture_log_density(const GaussianMixture& p, const GaussianMixture& q, double alpha,
                           const double* x);
std::vector<double> mixture_score(const GaussianMixture& p, const GaussianMixture& q,
                                  double alpha, const double* x);

// E[x | x_t] for x ~ gm and x_t = x + sigma * eps.
std::vector<double> posterior_mean(const GaussianMixture& gm, const double* x_t, double sigma);

std::vector<double> sample(const GaussianMixture& gm, Rng& rng);
void sample_n(const GaussianMixture& gm, Rng& rng, std::size_t n, double* out);

// 1-D only.
double cdf_1d(const GaussianMixture& gm, double x);

// Central differences, one coordinate at a time.
std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& at, double step = 1e-4);

}  // namespace somix::oracles
