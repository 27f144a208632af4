#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "somix/distill.hpp"
#include "somix/schedules.hpp"

using namespace somix;
using ad::Tape;
using ad::Tensor;

namespace {

oracles::GaussianMixture teacher_mixture() {
  return oracles::GaussianMixture({0.5, 0.5}, {{-1.0, 0.0}, {1.0, 0.5}}, {0.3, 0.5});
}

nets::ScoreNetSpec fake_spec(std::uint64_t seed) {
  nets::ScoreNetSpec s;
  s.data_dim = 2;
  s.hidden = {8, 8};
  s.alpha_embed_dim = 8;
  s.noise_embed_dim = 8;
  s.alpha_conditioned = false;
  s.discriminator_head = true;
  s.disc_hidden = {8};
  s.sigma_data = 0.7;
  s.seed = seed;
  return s;
}

distill::ExplicitScoreBundle make_bundle(std::uint64_t seed) {
  distill::ExplicitScoreBundle b(std::make_shared<distill::AnalyticGmmTeacher>(teacher_mixture()),
                                 nets::AmortizedScoreNet(fake_spec(seed), "f"));
  Rng rng(seed + 5);
  for (auto& p : b.fake.trainable_params())
    for (auto& v : p.tensor.data()) v += 0.1 * rng.normal();
  return b;
}

}  // namespace

TEST_CASE("explicit mixture weight hits exact endpoints and the centered value") {
  for (const double logit : {-3.0, 0.0, 2.5}) {
    CHECK(distill::explicit_mixture_weight_value(logit, 0.0) == 0.0);
    CHECK(distill::explicit_mixture_weight_value(logit, 1.0) == 1.0);
    CHECK(distill::explicit_mixture_weight_value(logit, 0.5) ==
          doctest::Approx(ad::sigmoid_value(logit)).epsilon(1e-14));
  }
  // Monotone in alpha for a fixed logit.
  double prev = -1.0;
  for (double a = 0.0; a <= 1.0; a += 0.1) {
    const double d = distill::explicit_mixture_weight_value(0.3, a);
    CHECK(d >= prev);
    prev = d;
  }
  // Interior values clamp the log-odds argument.
  CHECK(distill::explicit_mixture_weight_value(0.0, 1e-9) ==
        doctest::Approx(distill::explicit_mixture_weight_value(0.0, 1e-3)).epsilon(1e-14));
}

TEST_CASE("analytic teacher reproduces the convolved oracle score") {
  const auto gm = teacher_mixture();
  distill::AnalyticGmmTeacher teacher(gm);
  CHECK(teacher.dim() == 2);
  Rng rng(61);
  const std::size_t n = 7;
  std::vector<double> xt(n * 2);
  for (auto& v : xt) v = rng.normal(0.0, 1.5);
  const std::vector<double> sigma{0.45};
  const auto got = teacher.score_values(xt, n, sigma);
  const auto noised = oracles::convolve(gm, 0.45);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ref = oracles::score(noised, &xt[i * 2]);
    CHECK(got[i * 2] == doctest::Approx(ref[0]).epsilon(1e-12));
    CHECK(got[i * 2 + 1] == doctest::Approx(ref[1]).epsilon(1e-12));
  }

  // Default denoiser is the Tweedie identity on the teacher score.
  std::vector<double> den(n * 2);
  teacher.denoiser(xt.data(), n, sigma, den.data());
  for (std::size_t i = 0; i < n * 2; ++i)
    CHECK(den[i] == doctest::Approx(xt[i] + 0.45 * 0.45 * got[i]).epsilon(1e-12));

  distill::AnalyticGmmTeacher other(oracles::GaussianMixture({1.0}, {{0.0, 0.0}}, {1.0}));
  CHECK(teacher.checksum() != other.checksum());
  CHECK(teacher.checksum() == distill::AnalyticGmmTeacher(teacher_mixture()).checksum());
}

TEST_CASE("assembled mixture score interpolates teacher and fake exactly") {
  auto b = make_bundle(1);
  Rng rng(62);
  const std::size_t n = 5;
  std::vector<double> xt(n * 2);
  for (auto& v : xt) v = rng.normal();
  const std::vector<double> sigma{0.6};

  const auto fake = b.fake.score_values(xt, n, {0.0}, sigma);
  const auto teach = b.teacher->score_values(xt, n, sigma);

  const auto at0 = b.mixture_score_values(xt, n, {0.0}, sigma);
  CHECK(at0 == fake);
  const auto at1 = b.mixture_score_values(xt, n, {1.0}, sigma);
  CHECK(at1 == teach);

  const std::vector<double> alpha{0.3};
  const auto mid = b.mixture_score_values(xt, n, alpha, sigma);
  const auto d = b.weight_values(xt, n, alpha, sigma);
  const auto logits = b.fake.logit_values(xt, n, sigma);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(d[i] == doctest::Approx(distill::explicit_mixture_weight_value(logits[i], 0.3))
                      .epsilon(1e-12));
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(mid[i * 2 + j] ==
            doctest::Approx(d[i] * teach[i * 2 + j] + (1.0 - d[i]) * fake[i * 2 + j])
                .epsilon(1e-12));
  }
}

TEST_CASE("explicit regression at zero data weight trains only the fake score") {
  auto b = make_bundle(2);
  Rng dr(63);
  Tensor real = Tensor::randn(6, 2, dr);
  Tensor fake = Tensor::randn(6, 2, dr);
  Rng nr(64);
  Tape t;
  auto L = distill::explicit_dsm_loss(t, b, real, fake, {0.0}, {0.7}, nr);
  CHECK(L.real_term == 0.0);
  CHECK(L.fake_term > 0.0);
  for (auto& p : b.fake.trainable_params()) p.tensor.zero_grad();
  t.backward(L.loss);
  double trunk_norm = 0.0, head_norm = 0.0;
  for (auto& p : b.fake.trainable_params()) {
    double acc = 0.0;
    for (const double g : p.tensor.grad()) acc += g * g;
    if (p.name.find(".disc") != std::string::npos)
      head_norm += acc;
    else
      trunk_norm += acc;
  }
  // At alpha = 0 the combination weight is pinned, so no signal reaches the
  // head; the fake score still learns.
  CHECK(trunk_norm > 0.0);
  CHECK(head_norm == 0.0);
}

TEST_CASE("distillation direction applies the combination weight and teacher residual") {
  auto b = make_bundle(3);
  Rng rng(65);
  const std::size_t n = 4;
  std::vector<double> x(n * 2), xt(n * 2), alpha(n);
  for (auto& v : x) v = rng.normal();
  for (auto& v : xt) v = rng.normal();
  for (auto& v : alpha) v = rng.uniform(0.2, 0.95);
  const std::vector<double> sigma{0.5};

  const auto fake = b.fake.score_values(xt, n, {0.0}, sigma);
  const auto teach = b.teacher->score_values(xt, n, sigma);
  const auto d = b.weight_values(xt, n, alpha, sigma);

  SUBCASE("without the residual factor") {
    const auto dir = distill::smd_direction(b, x, xt, n, alpha, sigma, false, 1e-8);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        CHECK(dir.dir[i * 2 + j] ==
              doctest::Approx(d[i] * (fake[i * 2 + j] - teach[i * 2 + j]) / alpha[i])
                  .epsilon(1e-12));
  }
  SUBCASE("with the residual factor from the teacher denoiser") {
    const auto dir = distill::smd_direction(b, x, xt, n, alpha, sigma, true, 1e-8);
    std::vector<double> den(n * 2);
    b.teacher->denoiser(xt.data(), n, sigma, den.data());
    for (std::size_t i = 0; i < n; ++i) {
      double l1 = 0.0;
      for (std::size_t j = 0; j < 2; ++j) l1 += std::abs(x[i * 2 + j] - den[i * 2 + j]);
      const double w = sigma[0] * sigma[0] / (l1 + 1e-8);
      for (std::size_t j = 0; j < 2; ++j)
        CHECK(dir.dir[i * 2 + j] ==
              doctest::Approx(w * d[i] * (fake[i * 2 + j] - teach[i * 2 + j]) / alpha[i])
                  .epsilon(1e-12));
    }
  }
  CHECK_THROWS(distill::smd_direction(b, x, xt, n, {0.0}, sigma, false, 1e-8));
}

TEST_CASE("reduced objective evaluates its defining expression") {
  CHECK(distill::lecam_reduced_objective({1.0, 1.0}, {0.0, 0.0}, 0.3) == 0.0);
  CHECK(distill::lecam_reduced_objective({0.0}, {1.0}, 0.7) == doctest::Approx(1.0));
  Rng rng(66);
  std::vector<double> dr(9), df(9);
  for (auto& v : dr) v = rng.uniform();
  for (auto& v : df) v = rng.uniform();
  const double a = 0.35;
  double er = 0.0, ef = 0.0;
  for (const double v : dr) er += (1.0 - v) * (1.0 - v);
  for (const double v : df) ef += v * v;
  CHECK(distill::lecam_reduced_objective(dr, df, a) ==
        doctest::Approx(a * er / 9.0 + (1.0 - a) * ef / 9.0).epsilon(1e-14));
}

TEST_CASE("frozen net teacher mirrors the wrapped score net") {
  nets::ScoreNetSpec s = fake_spec(9);
  s.discriminator_head = false;
  nets::AmortizedScoreNet net(s, "teacher");
  Rng rng(67);
  for (auto& p : net.trainable_params())
    for (auto& v : p.tensor.data()) v += 0.05 * rng.normal();

  distill::FrozenNetTeacher ft(net);
  CHECK(ft.dim() == 2);
  std::vector<double> xt{0.2, -0.4, 1.0, 0.3};
  const auto got = ft.score_values(xt, 2, {0.8});
  const auto ref = net.score_values(xt, 2, {0.0}, {0.8});
  CHECK(got == ref);

  const auto sum_before = ft.checksum();
  for (auto& p : net.trainable_params()) {
    p.tensor.data()[0] += 1.0;
    break;
  }
  distill::FrozenNetTeacher ft2(net);
  CHECK(ft2.checksum() != sum_before);
}
