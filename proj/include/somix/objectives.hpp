#pragma once

// Training objectives. The score network is fit with a noise-weighted
// denoising regression whose population minimizer is the score of the
// alpha-mixture of data and generator distributions. The generator descends
// a surrogate whose gradient matches the divergence gradient: the inner
// product of the noised fake batch with a frozen per-sample direction
// w * (s(x_t; 0) - s(x_t; alpha)) / alpha. A logistic head provides the
// auxiliary GAN terms.

#include <cstdint>
#include <vector>

#include "somix/autodiff.hpp"
#include "somix/nets.hpp"
#include "somix/rng.hpp"

namespace somix::objectives {

using ad::Tape;
using ad::Tensor;

// mean_i weight[i] * |f_i - target_i|^2 over rows.
Tensor weighted_denoise_residual(Tape& tape, const Tensor& f, const Tensor& target,
                                 const std::vector<double>& weight);

struct DsmLoss {
  Tensor loss;
  double real_term = 0.0;  // value of the data-side term
  double fake_term = 0.0;  // value of the generator-side term
};

// alpha-weighted two-sided denoising loss. real and fake are detached
// {n,d} batches; noise is drawn here (real rows first, then fake rows).
// Each side's residual is weighted by the usual denoiser weight
// (sigma^2+sigma_data^2)/(sigma*sigma_data)^2 and by alpha (data side) or
// 1-alpha (generator side).
DsmLoss mixture_dsm_loss(Tape& tape, const nets::AmortizedScoreNet& net, const Tensor& real,
                         const Tensor& fake, const std::vector<double>& alpha,
                         const std::vector<double>& sigma, Rng& rng);

struct AdaptiveWeightOptions {
  bool use_w_alpha = true;
  bool use_w_dmd = true;
  double eps = 1e-8;
};

struct AdaptiveWeights {
  std::vector<double> w;
  double mean_w_alpha = 1.0;
  double mean_w_dmd = 1.0;
};

// Per-sample w = w_alpha * w_dmd, all pieces computed from frozen network
// evaluations. w_alpha = alpha * sqrt(|s0-s1|^2 / (|s0-salpha|^2 + eps)),
// with w_alpha = 1 exactly when alpha = 1. w_dmd = sigma^2/(|x - f1|_1 + eps)
// where f1 is the data-side (alpha = 1) denoiser output.
AdaptiveWeights adaptive_weight(const nets::AmortizedScoreNet& net, const std::vector<double>& x,
                                const std::vector<double>& x_t, std::size_t n,
                                const std::vector<double>& alpha,
                                const std::vector<double>& sigma,
                                const AdaptiveWeightOptions& opts);

struct Direction {
  std::vector<double> dir;  // n x d, frozen
  double mean_w_alpha = 1.0;
  double mean_w_dmd = 1.0;
  double mean_norm = 0.0;   // mean row L2 norm of dir
};

// dir_i = w_i * (s(x_t_i; 0) - s(x_t_i; alpha_i)) / alpha_i. alpha must be
// positive everywhere.
Direction smt_direction(const nets::AmortizedScoreNet& net, const std::vector<double>& x,
                        const std::vector<double>& x_t, std::size_t n,
                        const std::vector<double>& alpha, const std::vector<double>& sigma,
                        const AdaptiveWeightOptions& opts);

// (1/n) sum_i <direction_i, x_t_i> with direction held constant.
Tensor inner_surrogate(Tape& tape, const Tensor& x_t, const std::vector<double>& direction);

// Rebuilds x_t = g(z) + noise on the tape and returns inner_surrogate against
// a fixed direction; lets callers differentiate the surrogate through the
// generator with every stochastic piece pinned.
Tensor noisy_generator_surrogate(Tape& tape, const nets::GeneratorNet& gen, const Tensor& z,
                                 const std::vector<double>& noise,
                                 const std::vector<double>& direction);

// mean_i softplus(-(logit(x_t_i) + logit_offset(alpha_i))); the head is
// frozen, gradients flow into x_t only.
Tensor gan_generator_loss(Tape& tape, const nets::AmortizedScoreNet& net, const Tensor& x_t_fake,
                          const std::vector<double>& alpha, const std::vector<double>& sigma);

// mean_i alpha_i softplus(-(l_real_i + off_i)) + mean_i (1-alpha_i)
// softplus(l_fake_i + off_i); noises both batches (real rows first).
Tensor gan_discriminator_loss(Tape& tape, const nets::AmortizedScoreNet& net, const Tensor& real,
                              const Tensor& fake, const std::vector<double>& alpha,
                              const std::vector<double>& sigma, Rng& rng);

// Shared plumbing for losses that noise a batch: x_t = x + sigma * eps with
// eps drawn row-major from rng.
Tensor noised_copy(Tape& tape, const Tensor& x, const std::vector<double>& sigma, Rng& rng);

// Broadcast helper: returns per-row values (size n) from a size-1-or-n vector.
std::vector<double> expand_rows(const std::vector<double>& v, std::size_t n);

}  // namespace somix::objectives
