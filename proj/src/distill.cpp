#include "somix/distill.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "somix/schedules.hpp"

namespace somix::distill {

namespace {
std::uint64_t fnv1a_doubles(std::uint64_t h, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &x[i], sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}
constexpr std::uint64_t fnv_offset = 0xcbf29ce484222325ull;
}  // namespace

void TeacherScore::denoiser(const double* x_t, std::size_t n, const std::vector<double>& sigma,
                            double* out) const {
  const std::size_t d = dim();
  score(x_t, n, sigma, out);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sigma.size() == 1 ? sigma[0] : sigma[i];
    for (std::size_t j = 0; j < d; ++j)
      out[i * d + j] = x_t[i * d + j] + s * s * out[i * d + j];
  }
}

std::vector<double> TeacherScore::score_values(const std::vector<double>& x_t, std::size_t n,
                                               const std::vector<double>& sigma) const {
  std::vector<double> out(n * dim());
  score(x_t.data(), n, sigma, out.data());
  return out;
}

AnalyticGmmTeacher::AnalyticGmmTeacher(oracles::GaussianMixture gm) : gm_(std::move(gm)) {}

std::size_t AnalyticGmmTeacher::dim() const { return gm_.dim(); }

void AnalyticGmmTeacher::score(const double* x_t, std::size_t n,
                               const std::vector<double>& sigma, double* out) const {
  const std::size_t d = gm_.dim();
  if (sigma.size() == 1) {
    const oracles::GaussianMixture noisy = oracles::convolve(gm_, sigma[0]);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> s = oracles::score(noisy, x_t + i * d);
      std::copy(s.begin(), s.end(), out + i * d);
    }
    return;
  }
  if (sigma.size() != n)
    throw std::invalid_argument("AnalyticGmmTeacher: sigma must have size 1 or n");
  for (std::size_t i = 0; i < n; ++i) {
    const oracles::GaussianMixture noisy = oracles::convolve(gm_, sigma[i]);
    const std::vector<double> s = oracles::score(noisy, x_t + i * d);
    std::copy(s.begin(), s.end(), out + i * d);
  }
}

std::uint64_t AnalyticGmmTeacher::checksum() const {
  std::uint64_t h = fnv_offset;
  h = fnv1a_doubles(h, gm_.weights.data(), gm_.weights.size());
  for (const auto& m : gm_.means) h = fnv1a_doubles(h, m.data(), m.size());
  h = fnv1a_doubles(h, gm_.variances.data(), gm_.variances.size());
  return h;
}

FrozenNetTeacher::FrozenNetTeacher(nets::AmortizedScoreNet net) : net_(std::move(net)) {}

std::size_t FrozenNetTeacher::dim() const { return net_.spec().data_dim; }

void FrozenNetTeacher::score(const double* x_t, std::size_t n, const std::vector<double>& sigma,
                             double* out) const {
  const std::size_t d = dim();
  std::vector<double> x(x_t, x_t + n * d);
  const std::vector<double> s = net_.score_values(x, n, {0.0}, sigma);
  std::copy(s.begin(), s.end(), out);
}

std::uint64_t FrozenNetTeacher::checksum() const {
  std::uint64_t h = fnv_offset;
  for (auto& p : const_cast<nets::AmortizedScoreNet&>(net_).state_params())
    h = fnv1a_doubles(h, p.tensor.data().data(), p.tensor.size());
  return h;
}

double explicit_mixture_weight_value(double logit, double alpha) {
  if (alpha == 0.0) return 0.0;
  if (alpha == 1.0) return 1.0;
  return ad::sigmoid_value(logit + logit_offset(alpha));
}

ExplicitScoreBundle::ExplicitScoreBundle(std::shared_ptr<TeacherScore> t,
                                         nets::AmortizedScoreNet f)
    : teacher(std::move(t)), fake(std::move(f)) {
  if (!teacher) throw std::invalid_argument("ExplicitScoreBundle: null teacher");
  if (teacher->dim() != fake.spec().data_dim)
    throw std::invalid_argument("ExplicitScoreBundle: teacher/fake dimension mismatch");
  if (fake.spec().alpha_conditioned)
    throw std::invalid_argument(
        "ExplicitScoreBundle: fake net must not be alpha-conditioned");
  if (!fake.spec().discriminator_head)
    throw std::invalid_argument("ExplicitScoreBundle: fake net needs the logit head");
}

Tensor ExplicitScoreBundle::mixture_weight(Tape& tape, const Tensor& x_t,
                                           const std::vector<double>& alpha,
                                           const std::vector<double>& sigma,
                                           bool freeze) const {
  const std::size_t n = x_t.rows();
  const std::vector<double> a = objectives::expand_rows(alpha, n);
  Tensor logit = fake.discriminator_logit(tape, x_t, sigma, freeze);
  // Interior rows go through the sigmoid; endpoint rows are pinned to the
  // exact limit with no gradient into the logit.
  std::vector<double> off(n), mask(n), endpoint(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    off[i] = logit_offset(a[i]);
    const bool interior = a[i] != 0.0 && a[i] != 1.0;
    mask[i] = interior ? 1.0 : 0.0;
    if (a[i] == 1.0) endpoint[i] = 1.0;
  }
  Tensor d = ad::sigmoid(tape, ad::add(tape, logit, Tensor::from_data(n, 1, std::move(off), false)));
  d = ad::mul(tape, d, Tensor::from_data(n, 1, std::move(mask), false));
  return ad::add(tape, d, Tensor::from_data(n, 1, std::move(endpoint), false));
}

Tensor ExplicitScoreBundle::mixture_score(Tape& tape, const Tensor& x_t,
                                          const std::vector<double>& alpha,
                                          const std::vector<double>& sigma,
                                          bool freeze) const {
  const std::size_t n = x_t.rows(), dd = x_t.cols();
  std::vector<double> sp(n * dd);
  teacher->score(x_t.data().data(), n, sigma, sp.data());
  Tensor s_teacher = Tensor::from_data(n, dd, std::move(sp), false);
  Tensor s_fake = fake.score(tape, x_t, {0.0}, sigma, freeze);
  Tensor d = mixture_weight(tape, x_t, alpha, sigma, freeze);
  Tensor one_minus_d = ad::sub(tape, Tensor::full(n, 1, 1.0, false), d);
  return ad::add(tape, ad::mul_rows(tape, s_teacher, d),
                 ad::mul_rows(tape, s_fake, one_minus_d));
}

std::vector<double> ExplicitScoreBundle::mixture_score_values(
    const std::vector<double>& x_t, std::size_t n, const std::vector<double>& alpha,
    const std::vector<double>& sigma) const {
  Tape scratch;
  Tensor x = Tensor::from_data(n, fake.spec().data_dim, x_t, false);
  return mixture_score(scratch, x, alpha, sigma, true).data();
}

std::vector<double> ExplicitScoreBundle::weight_values(const std::vector<double>& x_t,
                                                       std::size_t n,
                                                       const std::vector<double>& alpha,
                                                       const std::vector<double>& sigma) const {
  const std::vector<double> a = objectives::expand_rows(alpha, n);
  const std::vector<double> logits = fake.logit_values(x_t, n, sigma);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = explicit_mixture_weight_value(logits[i], a[i]);
  return out;
}

namespace {
// Score-form residual weight: the denoiser weight expressed for score errors,
// sigma^4 * (sigma^2+sd^2)/(sigma*sd)^2 = sigma^2 (sigma^2+sd^2)/sd^2.
double score_form_weight(double sigma, double sigma_data) {
  const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
  return s2 * (s2 + d2) / d2;
}

Tensor explicit_side_term(Tape& tape, const ExplicitScoreBundle& bundle, const Tensor& batch,
                          const std::vector<double>& alpha, const std::vector<double>& sigma,
                          Rng& rng, bool data_side) {
  const std::size_t n = batch.rows(), d = batch.cols();
  const std::vector<double> a = objectives::expand_rows(alpha, n);
  const std::vector<double> s = objectives::expand_rows(sigma, n);
  std::vector<double> noise(n * d), target(n * d), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double eps = rng.normal();
      noise[i * d + j] = s[i] * eps;
      target[i * d + j] = -eps / s[i];
    }
    const double conv = data_side ? a[i] : 1.0 - a[i];
    w[i] = conv * score_form_weight(s[i], bundle.fake.spec().sigma_data);
  }
  Tensor x_t = ad::add(tape, batch, Tensor::from_data(n, d, std::move(noise), false));
  Tensor s_mix = bundle.mixture_score(tape, x_t, a, s);
  return objectives::weighted_denoise_residual(
      tape, s_mix, Tensor::from_data(n, d, std::move(target), false), w);
}
}  // namespace

ExplicitDsmLoss explicit_dsm_loss(Tape& tape, const ExplicitScoreBundle& bundle,
                                  const Tensor& real, const Tensor& fake,
                                  const std::vector<double>& alpha,
                                  const std::vector<double>& sigma, Rng& rng) {
  if (real.requires_grad() || fake.requires_grad())
    throw std::invalid_argument("explicit_dsm_loss: batches must be detached");
  Tensor term_real = explicit_side_term(tape, bundle, real, alpha, sigma, rng, true);
  Tensor term_fake = explicit_side_term(tape, bundle, fake, alpha, sigma, rng, false);
  ExplicitDsmLoss out;
  out.loss = ad::add(tape, term_real, term_fake);
  out.real_term = term_real.value();
  out.fake_term = term_fake.value();
  return out;
}

objectives::Direction smd_direction(const ExplicitScoreBundle& bundle,
                                    const std::vector<double>& x,
                                    const std::vector<double>& x_t, std::size_t n,
                                    const std::vector<double>& alpha,
                                    const std::vector<double>& sigma, bool use_w_dmd,
                                    double eps) {
  const std::size_t d = bundle.teacher->dim();
  const std::vector<double> a = objectives::expand_rows(alpha, n);
  const std::vector<double> s = objectives::expand_rows(sigma, n);
  for (double ai : a)
    if (!(ai > 0.0))
      throw std::invalid_argument("smd_direction: alpha must be positive");

  std::vector<double> s_teacher(n * d);
  bundle.teacher->score(x_t.data(), n, s, s_teacher.data());
  const std::vector<double> s_fake = bundle.fake.score_values(x_t, n, {0.0}, s);
  const std::vector<double> dw = bundle.weight_values(x_t, n, a, s);

  std::vector<double> f_teacher;
  if (use_w_dmd) {
    f_teacher.resize(n * d);
    bundle.teacher->denoiser(x_t.data(), n, s, f_teacher.data());
  }

  objectives::Direction out;
  out.dir.resize(n * d);
  double norm_acc = 0.0, wd_acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double wd = 1.0;
    if (use_w_dmd) {
      double l1 = 0.0;
      for (std::size_t j = 0; j < d; ++j) l1 += std::abs(x[i * d + j] - f_teacher[i * d + j]);
      wd = s[i] * s[i] / (l1 + eps);
    }
    wd_acc += wd;
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = wd * dw[i] * (s_fake[i * d + j] - s_teacher[i * d + j]) / a[i];
      out.dir[i * d + j] = v;
      sq += v * v;
    }
    norm_acc += std::sqrt(sq);
  }
  out.mean_w_alpha = 1.0;
  out.mean_w_dmd = use_w_dmd ? wd_acc / static_cast<double>(n) : 1.0;
  out.mean_norm = norm_acc / static_cast<double>(n);
  return out;
}

double lecam_reduced_objective(const std::vector<double>& d_real,
                               const std::vector<double>& d_fake, double alpha) {
  if (d_real.empty() || d_fake.empty())
    throw std::invalid_argument("lecam_reduced_objective: empty inputs");
  double a = 0.0, b = 0.0;
  for (double v : d_real) a += (1.0 - v) * (1.0 - v);
  for (double v : d_fake) b += v * v;
  return alpha * a / static_cast<double>(d_real.size()) +
         (1.0 - alpha) * b / static_cast<double>(d_fake.size());
}

}  // namespace somix::distill
