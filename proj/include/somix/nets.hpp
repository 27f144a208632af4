#pragma once

// Model definitions: a plain MLP trunk with optional per-layer additive
// conditioning, fixed random Fourier embeddings for the conditioning scalars,
// the amortized score network (a preconditioned denoiser conditioned on noise
// level and mixing weight, with an optional discriminator head on its
// features), and the sample generator.

#include <cstdint>
#include <string>
#include <vector>

#include "somix/autodiff.hpp"
#include "somix/rng.hpp"
#include "somix/schedules.hpp"

namespace somix::nets {

using ad::Tape;
using ad::Tensor;

enum class Activation { silu, leaky_relu };
Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct Param {
  std::string name;
  Tensor tensor;
};

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden = {128, 128};
  std::size_t output_dim = 0;
  Activation activation = Activation::silu;
  double leaky_slope = 0.01;
};

class Mlp {
 public:
  Mlp() = default;
  // He-initialized weights (stddev sqrt(2/fan_in)), zero biases.
  Mlp(MlpSpec spec, std::string prefix, Rng& rng);

  Tensor forward(Tape& tape, const Tensor& x, bool freeze = false) const;

  // cond ({1,h} or {n,h}, h = uniform hidden width) is added to every hidden
  // pre-activation. May be undefined (no conditioning). last_hidden, when
  // non-null, receives the activated features before the output layer.
  Tensor forward_conditioned(Tape& tape, const Tensor& x, const Tensor& cond, bool freeze,
                             Tensor* last_hidden = nullptr) const;

  // Runs only up to (and including) the last hidden activation.
  Tensor hidden_features(Tape& tape, const Tensor& x, const Tensor& cond, bool freeze) const;

  std::vector<Param> params();
  const MlpSpec& spec() const { return spec_; }
  std::size_t hidden_width() const;

 private:
  MlpSpec spec_;
  std::string prefix_;
  std::vector<Tensor> w_, b_;

  Tensor run(Tape& tape, const Tensor& x, const Tensor& cond, bool freeze, bool full,
             Tensor* last_hidden) const;
};

// Fixed frequencies f ~ N(0, scale^2); u maps to the row
// [cos(2 pi f_1 u) .. cos(2 pi f_{d/2} u) | sin(2 pi f_1 u) .. ].
class FourierEmbedding {
 public:
  FourierEmbedding() = default;
  FourierEmbedding(std::size_t dim, double scale, std::string name, Rng& rng);

  // u has size 1 (one row, shared across the batch) or size n (one row each).
  Tensor embed(const std::vector<double>& u) const;
  std::size_t dim() const { return freqs_.defined() ? 2 * freqs_.size() : 0; }
  Param frequencies();  // fixed, requires_grad = false; persisted in checkpoints

 private:
  Tensor freqs_;  // {1, dim/2}
  std::string name_;
};

struct ScoreNetSpec {
  std::size_t data_dim = 2;
  std::vector<std::size_t> hidden = {128, 128};
  Activation activation = Activation::silu;
  std::size_t alpha_embed_dim = 64;
  std::size_t noise_embed_dim = 64;
  double fourier_scale = 16.0;
  bool alpha_conditioned = true;   // off: the net models a single density's score
  bool discriminator_head = true;
  std::vector<std::size_t> disc_hidden = {64};
  double sigma_data = 0.5;
  double sigma_min = 0.01;
  double sigma_max = 5.0;
  std::uint64_t seed = 0;
};

// Denoiser f(x_t; alpha, sigma) = c_skip(sigma) x_t + c_out(sigma) g(x_t, cond)
// where cond = silu(W_aux c_aux + W_alpha c_alpha). W_alpha starts at zero, so
// a fresh net is exactly alpha-independent. The score comes out of the
// denoiser as (f - x_t)/sigma^2. alpha and sigma arguments have size 1
// (shared) or n (per row).
class AmortizedScoreNet {
 public:
  AmortizedScoreNet() = default;
  explicit AmortizedScoreNet(ScoreNetSpec spec, std::string prefix = "score");

  Tensor denoiser(Tape& tape, const Tensor& x_t, const std::vector<double>& alpha,
                  const std::vector<double>& sigma, bool freeze = false) const;
  Tensor score(Tape& tape, const Tensor& x_t, const std::vector<double>& alpha,
               const std::vector<double>& sigma, bool freeze = false) const;
  // Raw trunk output g before preconditioning.
  Tensor raw_direction(Tape& tape, const Tensor& x_t, const std::vector<double>& alpha,
                       const std::vector<double>& sigma, bool freeze = false) const;
  // Head on the trunk features, conditioning fixed at alpha = 1/2.
  Tensor discriminator_logit(Tape& tape, const Tensor& x_t, const std::vector<double>& sigma,
                             bool freeze = false) const;

  // Frozen evaluations into plain arrays (no tape escapes).
  std::vector<double> denoiser_values(const std::vector<double>& x_t, std::size_t n,
                                      const std::vector<double>& alpha,
                                      const std::vector<double>& sigma) const;
  std::vector<double> score_values(const std::vector<double>& x_t, std::size_t n,
                                   const std::vector<double>& alpha,
                                   const std::vector<double>& sigma) const;
  std::vector<double> logit_values(const std::vector<double>& x_t, std::size_t n,
                                   const std::vector<double>& sigma) const;

  std::vector<Param> trainable_params();
  std::vector<Param> state_params();  // trainable + fixed embedding frequencies
  const ScoreNetSpec& spec() const { return spec_; }
  Tensor alpha_weight() { return w_alpha_; }  // exposed for tests

 private:
  ScoreNetSpec spec_;
  std::string prefix_;
  Mlp trunk_;
  Mlp disc_head_;
  Tensor w_aux_, w_alpha_;
  FourierEmbedding alpha_emb_, noise_emb_;

  Tensor conditioning(Tape& tape, const std::vector<double>& alpha,
                      const std::vector<double>& sigma, std::size_t n, bool freeze) const;
  void check_inputs(const Tensor& x_t, const std::vector<double>& alpha,
                    const std::vector<double>& sigma) const;
};

// score = (f - x_t) / sigma^2, rowwise.
Tensor denoiser_to_score(Tape& tape, const Tensor& f, const Tensor& x_t,
                         const std::vector<double>& sigma);

struct GeneratorSpec {
  std::size_t data_dim = 2;
  std::size_t latent_dim = 2;
  std::vector<std::size_t> hidden = {128, 128};
  Activation activation = Activation::leaky_relu;
  double leaky_slope = 0.01;
  std::uint64_t seed = 0;
};

class GeneratorNet {
 public:
  GeneratorNet() = default;
  explicit GeneratorNet(GeneratorSpec spec, std::string prefix = "gen");

  Tensor forward(Tape& tape, const Tensor& z, bool freeze = false) const;
  Tensor sample_latent(std::size_t n, Rng& rng) const;      // {n, latent_dim}, constant
  std::vector<double> sample(std::size_t n, Rng& rng) const;  // frozen x = g(z) values
  std::vector<Param> params();
  const GeneratorSpec& spec() const { return spec_; }

 private:
  GeneratorSpec spec_;
  Mlp mlp_;
};

}  // namespace somix::nets
