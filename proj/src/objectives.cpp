#include "somix/objectives.hpp"

#include <cmath>
#include <stdexcept>

#include "somix/schedules.hpp"

namespace somix::objectives {

std::vector<double> expand_rows(const std::vector<double>& v, std::size_t n) {
  if (v.size() == n) return v;
  if (v.size() != 1)
    throw std::invalid_argument("expand_rows: vector must have size 1 or n");
  return std::vector<double>(n, v[0]);
}

Tensor weighted_denoise_residual(Tape& tape, const Tensor& f, const Tensor& target,
                                 const std::vector<double>& weight) {
  if (f.rows() != target.rows() || f.cols() != target.cols())
    throw std::invalid_argument("weighted_denoise_residual: shape mismatch");
  const std::size_t n = f.rows();
  Tensor sq = ad::row_sumsq(tape, ad::sub(tape, f, target));
  Tensor w = Tensor::from_data(n, 1, expand_rows(weight, n), false);
  return ad::mean(tape, ad::mul(tape, sq, w));
}

Tensor noised_copy(Tape& tape, const Tensor& x, const std::vector<double>& sigma, Rng& rng) {
  const std::size_t n = x.rows(), d = x.cols();
  const std::vector<double> s = expand_rows(sigma, n);
  std::vector<double> noise(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) noise[i * d + j] = s[i] * rng.normal();
  return ad::add(tape, x, Tensor::from_data(n, d, std::move(noise), false));
}

namespace {
std::vector<double> side_weights(const std::vector<double>& alpha,
                                 const std::vector<double>& sigma, std::size_t n,
                                 double sigma_data, bool data_side) {
  const std::vector<double> a = expand_rows(alpha, n);
  const std::vector<double> s = expand_rows(sigma, n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double conv = data_side ? a[i] : 1.0 - a[i];
    w[i] = conv * edm_loss_weight(s[i], sigma_data);
  }
  return w;
}
}  // namespace

DsmLoss mixture_dsm_loss(Tape& tape, const nets::AmortizedScoreNet& net, const Tensor& real,
                         const Tensor& fake, const std::vector<double>& alpha,
                         const std::vector<double>& sigma, Rng& rng) {
  if (real.requires_grad() || fake.requires_grad())
    throw std::invalid_argument("mixture_dsm_loss: batches must be detached");
  if (real.cols() != fake.cols())
    throw std::invalid_argument("mixture_dsm_loss: dimension mismatch");
  const double sd = net.spec().sigma_data;

  Tensor xt_real = noised_copy(tape, real, sigma, rng);
  Tensor f_real = net.denoiser(tape, xt_real, alpha, sigma);
  Tensor term_real = weighted_denoise_residual(
      tape, f_real, real, side_weights(alpha, sigma, real.rows(), sd, true));

  Tensor xt_fake = noised_copy(tape, fake, sigma, rng);
  Tensor f_fake = net.denoiser(tape, xt_fake, alpha, sigma);
  Tensor term_fake = weighted_denoise_residual(
      tape, f_fake, fake, side_weights(alpha, sigma, fake.rows(), sd, false));

  DsmLoss out;
  out.loss = ad::add(tape, term_real, term_fake);
  out.real_term = term_real.value();
  out.fake_term = term_fake.value();
  return out;
}

namespace {
struct FrozenEvals {
  std::vector<double> s0, s1, s_alpha, f0;
};

// One frozen forward per needed conditioning value.
FrozenEvals frozen_mixture_evals(const nets::AmortizedScoreNet& net,
                                 const std::vector<double>& x_t, std::size_t n,
                                 const std::vector<double>& alpha,
                                 const std::vector<double>& sigma, bool need_s1,
                                 bool need_salpha) {
  FrozenEvals e;
  e.f0 = net.denoiser_values(x_t, n, {0.0}, sigma);
  const std::size_t d = net.spec().data_dim;
  const std::vector<double> s = expand_rows(sigma, n);
  e.s0.resize(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      e.s0[i * d + j] = (e.f0[i * d + j] - x_t[i * d + j]) / (s[i] * s[i]);
  if (need_s1) e.s1 = net.score_values(x_t, n, {1.0}, sigma);
  if (need_salpha) e.s_alpha = net.score_values(x_t, n, alpha, sigma);
  return e;
}

double row_sq_diff(const std::vector<double>& a, const std::vector<double>& b, std::size_t i,
                   std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double v = a[i * d + j] - b[i * d + j];
    acc += v * v;
  }
  return acc;
}
}  // namespace

AdaptiveWeights adaptive_weight(const nets::AmortizedScoreNet& net, const std::vector<double>& x,
                                const std::vector<double>& x_t, std::size_t n,
                                const std::vector<double>& alpha,
                                const std::vector<double>& sigma,
                                const AdaptiveWeightOptions& opts) {
  const std::size_t d = net.spec().data_dim;
  if (x.size() != n * d || x_t.size() != n * d)
    throw std::invalid_argument("adaptive_weight: bad batch size");
  const std::vector<double> a = expand_rows(alpha, n);
  const std::vector<double> s = expand_rows(sigma, n);
  const bool need_s1 = opts.use_w_alpha || opts.use_w_dmd;
  const FrozenEvals e = frozen_mixture_evals(net, x_t, n, a, s, need_s1, true);

  AdaptiveWeights out;
  out.w.assign(n, 1.0);
  double sum_wa = 0.0, sum_wd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double wa = 1.0;
    if (opts.use_w_alpha) {
      if (a[i] == 1.0) {
        wa = 1.0;
      } else {
        const double num = row_sq_diff(e.s0, e.s1, i, d);
        const double den = row_sq_diff(e.s0, e.s_alpha, i, d) + opts.eps;
        wa = a[i] * std::sqrt(num / den);
      }
    }
    double wd = 1.0;
    if (opts.use_w_dmd) {
      // Residual of the data-side denoiser f(x_t; 1) = x_t + sigma^2 s1.
      double l1 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double f1 = x_t[i * d + j] + s[i] * s[i] * e.s1[i * d + j];
        l1 += std::abs(x[i * d + j] - f1);
      }
      wd = s[i] * s[i] / (l1 + opts.eps);
    }
    out.w[i] = wa * wd;
    sum_wa += wa;
    sum_wd += wd;
  }
  out.mean_w_alpha = sum_wa / static_cast<double>(n);
  out.mean_w_dmd = sum_wd / static_cast<double>(n);
  return out;
}

Direction smt_direction(const nets::AmortizedScoreNet& net, const std::vector<double>& x,
                        const std::vector<double>& x_t, std::size_t n,
                        const std::vector<double>& alpha, const std::vector<double>& sigma,
                        const AdaptiveWeightOptions& opts) {
  const std::size_t d = net.spec().data_dim;
  const std::vector<double> a = expand_rows(alpha, n);
  for (double ai : a)
    if (!(ai > 0.0))
      throw std::invalid_argument("smt_direction: alpha must be positive");
  const AdaptiveWeights w = adaptive_weight(net, x, x_t, n, a, sigma, opts);
  // Recompute the two scores the direction needs; evaluations are frozen so
  // values agree with the ones inside adaptive_weight.
  const FrozenEvals e = frozen_mixture_evals(net, x_t, n, a, expand_rows(sigma, n), false, true);

  Direction out;
  out.dir.resize(n * d);
  out.mean_w_alpha = w.mean_w_alpha;
  out.mean_w_dmd = w.mean_w_dmd;
  double norm_acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = w.w[i] * (e.s0[i * d + j] - e.s_alpha[i * d + j]) / a[i];
      out.dir[i * d + j] = v;
      sq += v * v;
    }
    norm_acc += std::sqrt(sq);
  }
  out.mean_norm = norm_acc / static_cast<double>(n);
  return out;
}

Tensor inner_surrogate(Tape& tape, const Tensor& x_t, const std::vector<double>& direction) {
  if (direction.size() != x_t.size())
    throw std::invalid_argument("inner_surrogate: direction size mismatch");
  Tensor dir = Tensor::from_data(x_t.rows(), x_t.cols(), direction, false);
  return ad::mul_scalar(tape, ad::sum(tape, ad::mul(tape, x_t, dir)),
                        1.0 / static_cast<double>(x_t.rows()));
}

Tensor noisy_generator_surrogate(Tape& tape, const nets::GeneratorNet& gen, const Tensor& z,
                                 const std::vector<double>& noise,
                                 const std::vector<double>& direction) {
  Tensor x = gen.forward(tape, z);
  if (noise.size() != x.size())
    throw std::invalid_argument("noisy_generator_surrogate: noise size mismatch");
  Tensor x_t = ad::add(tape, x, Tensor::from_data(x.rows(), x.cols(), noise, false));
  return inner_surrogate(tape, x_t, direction);
}

namespace {
// mean_i w_i * softplus(sign * (logit_i + offset_i))
Tensor weighted_softplus_logit(Tape& tape, const Tensor& logit,
                               const std::vector<double>& alpha, std::size_t n, double sign,
                               bool weight_with_alpha, bool weight_with_one_minus_alpha) {
  const std::vector<double> a = expand_rows(alpha, n);
  std::vector<double> off(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    off[i] = sign * logit_offset(a[i]);
    if (weight_with_alpha) w[i] = a[i];
    if (weight_with_one_minus_alpha) w[i] = 1.0 - a[i];
  }
  Tensor shifted = ad::add(tape, ad::mul_scalar(tape, logit, sign),
                           Tensor::from_data(n, 1, std::move(off), false));
  Tensor sp = ad::softplus(tape, shifted);
  return ad::mean(tape, ad::mul(tape, sp, Tensor::from_data(n, 1, std::move(w), false)));
}
}  // namespace

Tensor gan_generator_loss(Tape& tape, const nets::AmortizedScoreNet& net, const Tensor& x_t_fake,
                          const std::vector<double>& alpha, const std::vector<double>& sigma) {
  Tensor logit = net.discriminator_logit(tape, x_t_fake, sigma, /*freeze=*/true);
  return weighted_softplus_logit(tape, logit, alpha, x_t_fake.rows(), -1.0, false, false);
}

Tensor gan_discriminator_loss(Tape& tape, const nets::AmortizedScoreNet& net, const Tensor& real,
                              const Tensor& fake, const std::vector<double>& alpha,
                              const std::vector<double>& sigma, Rng& rng) {
  if (real.requires_grad() || fake.requires_grad())
    throw std::invalid_argument("gan_discriminator_loss: batches must be detached");
  Tensor xt_real = noised_copy(tape, real, sigma, rng);
  Tensor l_real = net.discriminator_logit(tape, xt_real, sigma);
  Tensor term_real =
      weighted_softplus_logit(tape, l_real, alpha, real.rows(), -1.0, true, false);
  Tensor xt_fake = noised_copy(tape, fake, sigma, rng);
  Tensor l_fake = net.discriminator_logit(tape, xt_fake, sigma);
  Tensor term_fake =
      weighted_softplus_logit(tape, l_fake, alpha, fake.rows(), 1.0, false, true);
  return ad::add(tape, term_real, term_fake);
}

}  // namespace somix::objectives
