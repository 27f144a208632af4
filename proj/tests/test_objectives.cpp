#include <doctest.h>

#include <cmath>
#include <vector>

#include "somix/objectives.hpp"
#include "somix/schedules.hpp"

using namespace somix;
using ad::Tape;
using ad::Tensor;

namespace {

nets::AmortizedScoreNet perturbed_net(std::uint64_t seed) {
  nets::ScoreNetSpec s;
  s.data_dim = 2;
  s.hidden = {8, 8};
  s.alpha_embed_dim = 8;
  s.noise_embed_dim = 8;
  s.disc_hidden = {8};
  s.sigma_data = 0.7;
  s.seed = seed;
  nets::AmortizedScoreNet net(s, "s");
  Rng rng(seed + 100);
  for (auto& p : net.trainable_params())
    for (auto& v : p.tensor.data()) v += 0.1 * rng.normal();
  return net;
}

}  // namespace

TEST_CASE("expand_rows broadcasts size-1 vectors and validates sizes") {
  const auto one = objectives::expand_rows({0.5}, 4);
  CHECK(one == std::vector<double>{0.5, 0.5, 0.5, 0.5});
  const std::vector<double> full{1.0, 2.0, 3.0};
  CHECK(objectives::expand_rows(full, 3) == full);
  CHECK_THROWS(objectives::expand_rows({1.0, 2.0}, 3));
}

TEST_CASE("noised copy adds noise of the requested scale") {
  Rng dr(51);
  Tensor x = Tensor::randn(2000, 2, dr);
  Rng nr(52);
  Tape t;
  Tensor xt = objectives::noised_copy(t, x, {0.7}, nr);
  double m2 = 0.0;
  for (std::size_t i = 0; i < xt.size(); ++i) {
    const double d = xt.data()[i] - x.data()[i];
    m2 += d * d;
  }
  m2 /= static_cast<double>(xt.size());
  CHECK(std::sqrt(m2) == doctest::Approx(0.7).epsilon(0.03));
}

TEST_CASE("weighted residual matches a hand computation") {
  Tensor f = Tensor::from_data(2, 2, {1.0, 2.0, 3.0, 4.0});
  Tensor y = Tensor::from_data(2, 2, {0.0, 2.0, 2.0, 6.0});
  Tape t;
  const double v = objectives::weighted_denoise_residual(t, f, y, {2.0, 0.5}).value();
  // row 0: 2 * (1 + 0) = 2; row 1: 0.5 * (1 + 4) = 2.5; mean = 2.25
  CHECK(v == doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("score regression weights each side by its mixture share") {
  auto net = perturbed_net(1);
  Rng dr(53);
  Tensor real = Tensor::randn(6, 2, dr);
  Tensor fake = Tensor::randn(6, 2, dr);
  const std::vector<double> sigma{0.9};

  Rng r1(54);
  Tape t1;
  const auto at_one = objectives::mixture_dsm_loss(t1, net, real, fake, {1.0}, sigma, r1);
  CHECK(at_one.fake_term == 0.0);
  CHECK(at_one.real_term > 0.0);

  Rng r2(54);
  Tape t2;
  const auto at_zero = objectives::mixture_dsm_loss(t2, net, real, fake, {0.0}, sigma, r2);
  CHECK(at_zero.real_term == 0.0);
  CHECK(at_zero.fake_term > 0.0);

  Rng r3(54);
  Tape t3;
  const auto mid = objectives::mixture_dsm_loss(t3, net, real, fake, {0.5}, sigma, r3);
  CHECK(mid.loss.value() == doctest::Approx(mid.real_term + mid.fake_term).epsilon(1e-12));
  CHECK(mid.loss.value() > 0.0);
}

TEST_CASE("adaptive weights reduce to their closed forms") {
  auto net = perturbed_net(2);
  Rng rng(55);
  const std::size_t n = 5;
  std::vector<double> x(n * 2), xt(n * 2), alpha(n), sigma(n);
  for (auto& v : x) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    sigma[i] = rng.uniform(0.4, 1.2);
    alpha[i] = rng.uniform(0.1, 0.9);
    for (std::size_t j = 0; j < 2; ++j) xt[i * 2 + j] = x[i * 2 + j] + sigma[i] * rng.normal();
  }

  SUBCASE("both factors off gives unit weights") {
    objectives::AdaptiveWeightOptions off;
    off.use_w_alpha = false;
    off.use_w_dmd = false;
    const auto w = objectives::adaptive_weight(net, x, xt, n, alpha, sigma, off);
    for (const double v : w.w) CHECK(v == 1.0);
    CHECK(w.mean_w_alpha == 1.0);
    CHECK(w.mean_w_dmd == 1.0);
  }

  SUBCASE("gap ratio factor matches the score slices") {
    objectives::AdaptiveWeightOptions opts;
    opts.use_w_dmd = false;
    const auto w = objectives::adaptive_weight(net, x, xt, n, alpha, sigma, opts);
    const auto s0 = net.score_values(xt, n, {0.0}, sigma);
    const auto s1 = net.score_values(xt, n, {1.0}, sigma);
    const auto sa = net.score_values(xt, n, alpha, sigma);
    for (std::size_t i = 0; i < n; ++i) {
      double full = 0.0, part = 0.0;
      for (std::size_t j = 0; j < 2; ++j) {
        full += (s0[i * 2 + j] - s1[i * 2 + j]) * (s0[i * 2 + j] - s1[i * 2 + j]);
        part += (s0[i * 2 + j] - sa[i * 2 + j]) * (s0[i * 2 + j] - sa[i * 2 + j]);
      }
      const double expect = alpha[i] * std::sqrt(full / (part + opts.eps));
      CHECK(w.w[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  SUBCASE("gap ratio is exactly one at full data weight") {
    objectives::AdaptiveWeightOptions opts;
    opts.use_w_dmd = false;
    const auto w = objectives::adaptive_weight(net, x, xt, n, {1.0}, sigma, opts);
    for (const double v : w.w) CHECK(v == 1.0);
  }

  SUBCASE("residual factor uses the data-side denoiser") {
    objectives::AdaptiveWeightOptions opts;
    opts.use_w_alpha = false;
    const auto w = objectives::adaptive_weight(net, x, xt, n, alpha, sigma, opts);
    const auto f1 = net.denoiser_values(xt, n, {1.0}, sigma);
    for (std::size_t i = 0; i < n; ++i) {
      double l1 = 0.0;
      for (std::size_t j = 0; j < 2; ++j) l1 += std::abs(x[i * 2 + j] - f1[i * 2 + j]);
      CHECK(w.w[i] == doctest::Approx(sigma[i] * sigma[i] / (l1 + opts.eps)).epsilon(1e-12));
    }
  }
}

TEST_CASE("update direction divides the slice gap by the mixing weight") {
  auto net = perturbed_net(3);
  Rng rng(56);
  const std::size_t n = 4;
  std::vector<double> x(n * 2), xt(n * 2), alpha(n);
  const std::vector<double> sigma{0.8};
  for (auto& v : x) v = rng.normal();
  for (auto& v : xt) v = rng.normal();
  for (auto& v : alpha) v = rng.uniform(0.2, 1.0);

  objectives::AdaptiveWeightOptions opts;
  const auto dir = objectives::smt_direction(net, x, xt, n, alpha, sigma, opts);
  const auto w = objectives::adaptive_weight(net, x, xt, n, alpha, sigma, opts);
  const auto s0 = net.score_values(xt, n, {0.0}, sigma);
  const auto sa = net.score_values(xt, n, alpha, sigma);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(dir.dir[i * 2 + j] ==
            doctest::Approx(w.w[i] * (s0[i * 2 + j] - sa[i * 2 + j]) / alpha[i]).epsilon(1e-12));

  CHECK_THROWS(objectives::smt_direction(net, x, xt, n, {0.0}, sigma, opts));
}

TEST_CASE("inner surrogate averages row inner products and feeds x_t only") {
  Tensor xt = Tensor::from_data(2, 2, {1.0, 2.0, 3.0, 4.0}, true);
  const std::vector<double> dir{0.5, -1.0, 2.0, 0.25};
  Tape t;
  Tensor L = objectives::inner_surrogate(t, xt, dir);
  CHECK(L.value() == doctest::Approx((0.5 - 2.0 + 6.0 + 1.0) / 2.0).epsilon(1e-12));
  t.backward(L);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(xt.grad()[i] == doctest::Approx(dir[i] / 2.0).epsilon(1e-12));
}

TEST_CASE("gan losses reproduce their per-row formulas") {
  auto net = perturbed_net(4);
  Rng rng(57);
  const std::size_t n = 6;
  Tensor fake = Tensor::randn(n, 2, rng);
  std::vector<double> alpha(n);
  for (auto& v : alpha) v = rng.uniform(0.1, 0.9);
  const std::vector<double> sigma{0.6};

  Tape t;
  const double gl = objectives::gan_generator_loss(t, net, fake, alpha, sigma).value();
  const auto lv = net.logit_values(fake.data(), n, sigma);
  double expect = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    expect += ad::softplus_value(-(lv[i] + logit_offset(alpha[i])));
  expect /= static_cast<double>(n);
  CHECK(gl == doctest::Approx(expect).epsilon(1e-12));

  Tensor real = Tensor::randn(n, 2, rng);
  Rng noise_a(58);
  Tape t2;
  const double dl =
      objectives::gan_discriminator_loss(t2, net, real, fake, alpha, sigma, noise_a).value();
  // Rebuild with the same noise stream: real rows are noised first.
  Rng noise_b(58);
  Tape t3;
  Tensor xr = objectives::noised_copy(t3, real, sigma, noise_b);
  Tensor xf = objectives::noised_copy(t3, fake, sigma, noise_b);
  const auto lr = net.logit_values(xr.data(), n, sigma);
  const auto lf = net.logit_values(xf.data(), n, sigma);
  double er = 0.0, ef = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double off = logit_offset(alpha[i]);
    er += alpha[i] * ad::softplus_value(-(lr[i] + off));
    ef += (1.0 - alpha[i]) * ad::softplus_value(lf[i] + off);
  }
  CHECK(dl == doctest::Approx((er + ef) / static_cast<double>(n)).epsilon(1e-12));
}
