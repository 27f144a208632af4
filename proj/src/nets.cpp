#include "somix/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace somix::nets {

Activation activation_from_string(const std::string& s) {
  if (s == "silu") return Activation::silu;
  if (s == "leaky_relu") return Activation::leaky_relu;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
  return a == Activation::silu ? "silu" : "leaky_relu";
}

namespace {
Tensor apply_activation(Tape& tape, const Tensor& x, Activation a, double slope) {
  return a == Activation::silu ? ad::silu(tape, x) : ad::leaky_relu(tape, x, slope);
}

Tensor maybe_freeze(const Tensor& t, bool freeze) {
  return freeze ? ad::stop_gradient(t) : t;
}
}  // namespace

Mlp::Mlp(MlpSpec spec, std::string prefix, Rng& rng)
    : spec_(std::move(spec)), prefix_(std::move(prefix)) {
  if (spec_.input_dim == 0 || spec_.output_dim == 0)
    throw std::invalid_argument("Mlp: input_dim and output_dim must be positive");
  std::size_t fan_in = spec_.input_dim;
  for (std::size_t h : spec_.hidden) {
    w_.push_back(Tensor::randn(fan_in, h, rng, std::sqrt(2.0 / static_cast<double>(fan_in)),
                               true));
    b_.push_back(Tensor::zeros(1, h, true));
    fan_in = h;
  }
  w_.push_back(Tensor::randn(fan_in, spec_.output_dim, rng,
                             std::sqrt(2.0 / static_cast<double>(fan_in)), true));
  b_.push_back(Tensor::zeros(1, spec_.output_dim, true));
}

std::size_t Mlp::hidden_width() const {
  if (spec_.hidden.empty()) return 0;
  for (std::size_t h : spec_.hidden)
    if (h != spec_.hidden[0])
      throw std::logic_error("Mlp: conditioning requires a uniform hidden width");
  return spec_.hidden[0];
}

Tensor Mlp::run(Tape& tape, const Tensor& x, const Tensor& cond, bool freeze, bool full,
                Tensor* last_hidden) const {
  if (!x.defined() || x.cols() != spec_.input_dim)
    throw std::invalid_argument("Mlp: input has wrong width");
  if (cond.defined() && spec_.hidden.empty())
    throw std::invalid_argument("Mlp: conditioning requires hidden layers");
  Tensor h = x;
  for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
    Tensor pre = ad::add(tape, ad::matmul(tape, h, maybe_freeze(w_[l], freeze)),
                         maybe_freeze(b_[l], freeze));
    if (cond.defined()) pre = ad::add(tape, pre, cond);
    h = apply_activation(tape, pre, spec_.activation, spec_.leaky_slope);
  }
  if (last_hidden) *last_hidden = h;
  if (!full) return h;
  return ad::add(tape, ad::matmul(tape, h, maybe_freeze(w_.back(), freeze)),
                 maybe_freeze(b_.back(), freeze));
}

Tensor Mlp::forward(Tape& tape, const Tensor& x, bool freeze) const {
  return run(tape, x, Tensor(), freeze, true, nullptr);
}

Tensor Mlp::forward_conditioned(Tape& tape, const Tensor& x, const Tensor& cond, bool freeze,
                                Tensor* last_hidden) const {
  return run(tape, x, cond, freeze, true, last_hidden);
}

Tensor Mlp::hidden_features(Tape& tape, const Tensor& x, const Tensor& cond, bool freeze) const {
  if (spec_.hidden.empty()) throw std::logic_error("Mlp: no hidden layers");
  return run(tape, x, cond, freeze, false, nullptr);
}

std::vector<Param> Mlp::params() {
  std::vector<Param> out;
  for (std::size_t l = 0; l < w_.size(); ++l) {
    out.push_back({prefix_ + ".w" + std::to_string(l), w_[l]});
    out.push_back({prefix_ + ".b" + std::to_string(l), b_[l]});
  }
  return out;
}

FourierEmbedding::FourierEmbedding(std::size_t dim, double scale, std::string name, Rng& rng)
    : name_(std::move(name)) {
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("FourierEmbedding: dim must be even and >= 2");
  freqs_ = Tensor::randn(1, dim / 2, rng, scale, false);
}

Tensor FourierEmbedding::embed(const std::vector<double>& u) const {
  if (!freqs_.defined()) throw std::logic_error("FourierEmbedding: uninitialized");
  if (u.empty()) throw std::invalid_argument("FourierEmbedding: empty input");
  const std::size_t half = freqs_.size();
  const double* f = freqs_.data().data();
  Tensor out = Tensor::zeros(u.size(), 2 * half, false);
  double* po = out.data().data();
  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < half; ++j) {
      const double a = two_pi * f[j] * u[i];
      po[i * 2 * half + j] = std::cos(a);
      po[i * 2 * half + half + j] = std::sin(a);
    }
  }
  return out;
}

Param FourierEmbedding::frequencies() { return {name_ + ".freqs", freqs_}; }

AmortizedScoreNet::AmortizedScoreNet(ScoreNetSpec spec, std::string prefix)
    : spec_(std::move(spec)), prefix_(std::move(prefix)) {
  if (spec_.hidden.empty())
    throw std::invalid_argument("AmortizedScoreNet: needs at least one hidden layer");
  if (!(spec_.sigma_data > 0.0))
    throw std::invalid_argument("AmortizedScoreNet: sigma_data must be positive");
  Rng rng(spec_.seed);
  alpha_emb_ = FourierEmbedding(spec_.alpha_embed_dim, spec_.fourier_scale,
                                prefix_ + ".alpha_emb", rng);
  noise_emb_ = FourierEmbedding(spec_.noise_embed_dim, spec_.fourier_scale,
                                prefix_ + ".noise_emb", rng);
  MlpSpec trunk;
  trunk.input_dim = spec_.data_dim;
  trunk.hidden = spec_.hidden;
  trunk.output_dim = spec_.data_dim;
  trunk.activation = spec_.activation;
  trunk_ = Mlp(trunk, prefix_ + ".trunk", rng);
  const std::size_t h = trunk_.hidden_width();
  w_aux_ = Tensor::randn(spec_.noise_embed_dim, h, rng,
                         std::sqrt(2.0 / static_cast<double>(spec_.noise_embed_dim)), true);
  // Zero so that a fresh net ignores alpha entirely.
  w_alpha_ = Tensor::zeros(spec_.alpha_embed_dim, h, true);
  if (spec_.discriminator_head) {
    MlpSpec head;
    head.input_dim = h;
    head.hidden = spec_.disc_hidden;
    head.output_dim = 1;
    head.activation = spec_.activation;
    disc_head_ = Mlp(head, prefix_ + ".disc", rng);
  }
}

void AmortizedScoreNet::check_inputs(const Tensor& x_t, const std::vector<double>& alpha,
                                     const std::vector<double>& sigma) const {
  if (!x_t.defined() || x_t.cols() != spec_.data_dim)
    throw std::invalid_argument("AmortizedScoreNet: input has wrong width");
  const std::size_t n = x_t.rows();
  if (alpha.size() != 1 && alpha.size() != n)
    throw std::invalid_argument("AmortizedScoreNet: alpha must have size 1 or n");
  if (sigma.size() != 1 && sigma.size() != n)
    throw std::invalid_argument("AmortizedScoreNet: sigma must have size 1 or n");
  for (double a : alpha)
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("AmortizedScoreNet: alpha outside [0,1]");
  for (double s : sigma)
    if (!(s >= spec_.sigma_min && s <= spec_.sigma_max))
      throw std::invalid_argument("AmortizedScoreNet: sigma outside [sigma_min, sigma_max]");
}

Tensor AmortizedScoreNet::conditioning(Tape& tape, const std::vector<double>& alpha,
                                       const std::vector<double>& sigma, std::size_t n,
                                       bool freeze) const {
  std::vector<double> c_noise(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) c_noise[i] = std::log(sigma[i]) / 4.0;
  Tensor aux = ad::matmul(tape, noise_emb_.embed(c_noise), maybe_freeze(w_aux_, freeze));
  if (!spec_.alpha_conditioned) return ad::silu(tape, aux);
  std::vector<double> a = alpha;
  // When one conditioner is shared and the other is per-row, expand the
  // shared one so the two terms line up.
  if (aux.rows() == 1 && a.size() > 1) {
    std::vector<double> cn(a.size(), c_noise[0]);
    aux = ad::matmul(tape, noise_emb_.embed(cn), maybe_freeze(w_aux_, freeze));
  } else if (aux.rows() > 1 && a.size() == 1) {
    a.assign(aux.rows(), alpha[0]);
  }
  (void)n;
  Tensor ag = ad::matmul(tape, alpha_emb_.embed(a), maybe_freeze(w_alpha_, freeze));
  return ad::silu(tape, ad::add(tape, aux, ag));
}

Tensor AmortizedScoreNet::raw_direction(Tape& tape, const Tensor& x_t,
                                        const std::vector<double>& alpha,
                                        const std::vector<double>& sigma, bool freeze) const {
  check_inputs(x_t, alpha, sigma);
  Tensor cond = conditioning(tape, alpha, sigma, x_t.rows(), freeze);
  return trunk_.forward_conditioned(tape, x_t, cond, freeze, nullptr);
}

Tensor AmortizedScoreNet::denoiser(Tape& tape, const Tensor& x_t,
                                   const std::vector<double>& alpha,
                                   const std::vector<double>& sigma, bool freeze) const {
  Tensor g = raw_direction(tape, x_t, alpha, sigma, freeze);
  const std::size_t n = x_t.rows();
  if (sigma.size() == 1) {
    const EdmCoefficients c = edm_coefficients(sigma[0], spec_.sigma_data);
    return ad::add(tape, ad::mul_scalar(tape, x_t, c.c_skip), ad::mul_scalar(tape, g, c.c_out));
  }
  std::vector<double> cs(n), co(n);
  for (std::size_t i = 0; i < n; ++i) {
    const EdmCoefficients c = edm_coefficients(sigma[i], spec_.sigma_data);
    cs[i] = c.c_skip;
    co[i] = c.c_out;
  }
  Tensor t_skip = Tensor::from_data(n, 1, std::move(cs), false);
  Tensor t_out = Tensor::from_data(n, 1, std::move(co), false);
  return ad::add(tape, ad::mul_rows(tape, x_t, t_skip), ad::mul_rows(tape, g, t_out));
}

Tensor AmortizedScoreNet::score(Tape& tape, const Tensor& x_t, const std::vector<double>& alpha,
                                const std::vector<double>& sigma, bool freeze) const {
  Tensor f = denoiser(tape, x_t, alpha, sigma, freeze);
  return denoiser_to_score(tape, f, x_t, sigma);
}

Tensor AmortizedScoreNet::discriminator_logit(Tape& tape, const Tensor& x_t,
                                              const std::vector<double>& sigma,
                                              bool freeze) const {
  if (!spec_.discriminator_head)
    throw std::logic_error("AmortizedScoreNet: no discriminator head");
  const std::vector<double> half{0.5};
  check_inputs(x_t, half, sigma);
  Tensor cond = conditioning(tape, half, sigma, x_t.rows(), freeze);
  Tensor feats = trunk_.hidden_features(tape, x_t, cond, freeze);
  return disc_head_.forward(tape, feats, freeze);
}

namespace {
std::vector<double> eval_values(const std::function<Tensor(Tape&)>& build) {
  Tape scratch;
  Tensor out = build(scratch);
  return out.data();
}
}  // namespace

std::vector<double> AmortizedScoreNet::denoiser_values(const std::vector<double>& x_t,
                                                       std::size_t n,
                                                       const std::vector<double>& alpha,
                                                       const std::vector<double>& sigma) const {
  Tensor x = Tensor::from_data(n, spec_.data_dim, x_t, false);
  return eval_values([&](Tape& t) { return denoiser(t, x, alpha, sigma, true); });
}

std::vector<double> AmortizedScoreNet::score_values(const std::vector<double>& x_t, std::size_t n,
                                                    const std::vector<double>& alpha,
                                                    const std::vector<double>& sigma) const {
  Tensor x = Tensor::from_data(n, spec_.data_dim, x_t, false);
  return eval_values([&](Tape& t) { return score(t, x, alpha, sigma, true); });
}

std::vector<double> AmortizedScoreNet::logit_values(const std::vector<double>& x_t, std::size_t n,
                                                    const std::vector<double>& sigma) const {
  Tensor x = Tensor::from_data(n, spec_.data_dim, x_t, false);
  return eval_values([&](Tape& t) { return discriminator_logit(t, x, sigma, true); });
}

std::vector<Param> AmortizedScoreNet::trainable_params() {
  std::vector<Param> out = trunk_.params();
  out.push_back({prefix_ + ".w_aux", w_aux_});
  if (spec_.alpha_conditioned) out.push_back({prefix_ + ".w_alpha", w_alpha_});
  if (spec_.discriminator_head) {
    std::vector<Param> head = disc_head_.params();
    out.insert(out.end(), head.begin(), head.end());
  }
  return out;
}

std::vector<Param> AmortizedScoreNet::state_params() {
  std::vector<Param> out = trainable_params();
  out.push_back(alpha_emb_.frequencies());
  out.push_back(noise_emb_.frequencies());
  return out;
}

Tensor denoiser_to_score(Tape& tape, const Tensor& f, const Tensor& x_t,
                         const std::vector<double>& sigma) {
  if (f.rows() != x_t.rows() || f.cols() != x_t.cols())
    throw std::invalid_argument("denoiser_to_score: shape mismatch");
  Tensor diff = ad::sub(tape, f, x_t);
  if (sigma.size() == 1) return ad::mul_scalar(tape, diff, 1.0 / (sigma[0] * sigma[0]));
  if (sigma.size() != x_t.rows())
    throw std::invalid_argument("denoiser_to_score: sigma must have size 1 or n");
  std::vector<double> inv(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) inv[i] = 1.0 / (sigma[i] * sigma[i]);
  return ad::mul_rows(tape, diff, Tensor::from_data(sigma.size(), 1, std::move(inv), false));
}

GeneratorNet::GeneratorNet(GeneratorSpec spec, std::string prefix) : spec_(std::move(spec)) {
  if (spec_.latent_dim == 0) spec_.latent_dim = spec_.data_dim;
  Rng rng(spec_.seed);
  MlpSpec m;
  m.input_dim = spec_.latent_dim;
  m.hidden = spec_.hidden;
  m.output_dim = spec_.data_dim;
  m.activation = spec_.activation;
  m.leaky_slope = spec_.leaky_slope;
  mlp_ = Mlp(m, std::move(prefix), rng);
}

Tensor GeneratorNet::forward(Tape& tape, const Tensor& z, bool freeze) const {
  return mlp_.forward(tape, z, freeze);
}

Tensor GeneratorNet::sample_latent(std::size_t n, Rng& rng) const {
  return Tensor::randn(n, spec_.latent_dim, rng, 1.0, false);
}

std::vector<double> GeneratorNet::sample(std::size_t n, Rng& rng) const {
  Tape scratch;
  Tensor z = sample_latent(n, rng);
  return mlp_.forward(scratch, z, true).data();
}

std::vector<Param> GeneratorNet::params() { return mlp_.params(); }

}  // namespace somix::nets
