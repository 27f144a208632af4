#pragma once

// Distillation against a fixed teacher score. Instead of amortizing over the
// mixing weight, the mixture score is assembled explicitly:
//   s_mix(x_t; alpha) = D * s_teacher + (1 - D) * s_fake,
//   D = sigmoid(logit(x_t) + log(alpha/(1-alpha))),
// with D pinned to exactly 0 at alpha = 0 and 1 at alpha = 1. The fake score
// net and the logit head train jointly through a two-sided denoising
// regression; the generator direction is D * (s_fake - s_teacher) / alpha.

#include <cstdint>
#include <memory>
#include <vector>

#include "somix/autodiff.hpp"
#include "somix/nets.hpp"
#include "somix/objectives.hpp"
#include "somix/oracles.hpp"

namespace somix::distill {

using ad::Tape;
using ad::Tensor;

class TeacherScore {
 public:
  virtual ~TeacherScore() = default;
  virtual std::size_t dim() const = 0;
  // Scores of the sigma-noised teacher density at rows of x_t. sigma has
  // size 1 or n.
  virtual void score(const double* x_t, std::size_t n, const std::vector<double>& sigma,
                     double* out) const = 0;
  // E[x | x_t] under the teacher; defaults to the Tweedie identity
  // x_t + sigma^2 * score.
  virtual void denoiser(const double* x_t, std::size_t n, const std::vector<double>& sigma,
                        double* out) const;
  // Fingerprint of everything the teacher's output depends on.
  virtual std::uint64_t checksum() const = 0;

  std::vector<double> score_values(const std::vector<double>& x_t, std::size_t n,
                                   const std::vector<double>& sigma) const;
};

class AnalyticGmmTeacher : public TeacherScore {
 public:
  explicit AnalyticGmmTeacher(oracles::GaussianMixture gm);
  std::size_t dim() const override;
  void score(const double* x_t, std::size_t n, const std::vector<double>& sigma,
             double* out) const override;
  std::uint64_t checksum() const override;
  const oracles::GaussianMixture& mixture() const { return gm_; }

 private:
  oracles::GaussianMixture gm_;
};

// Wraps a trained denoiser net; evaluated with its alpha conditioning off
// (or at alpha = 0 when the net is alpha-conditioned).
class FrozenNetTeacher : public TeacherScore {
 public:
  explicit FrozenNetTeacher(nets::AmortizedScoreNet net);
  std::size_t dim() const override;
  void score(const double* x_t, std::size_t n, const std::vector<double>& sigma,
             double* out) const override;
  std::uint64_t checksum() const override;

 private:
  nets::AmortizedScoreNet net_;
};

// sigmoid(logit + log(alpha/(1-alpha))) with exact endpoints at alpha = 0, 1;
// interior alpha is clamped to [1e-3, 1-1e-3] before the log.
double explicit_mixture_weight_value(double logit, double alpha);

struct ExplicitScoreBundle {
  std::shared_ptr<TeacherScore> teacher;
  nets::AmortizedScoreNet fake;  // alpha_conditioned = false, with head

  ExplicitScoreBundle() = default;
  ExplicitScoreBundle(std::shared_ptr<TeacherScore> t, nets::AmortizedScoreNet f);

  // D as a {n,1} tensor; gradients flow into the head on interior rows.
  Tensor mixture_weight(Tape& tape, const Tensor& x_t, const std::vector<double>& alpha,
                        const std::vector<double>& sigma, bool freeze = false) const;
  // D * s_teacher + (1 - D) * s_fake on the tape.
  Tensor mixture_score(Tape& tape, const Tensor& x_t, const std::vector<double>& alpha,
                       const std::vector<double>& sigma, bool freeze = false) const;

  std::vector<double> mixture_score_values(const std::vector<double>& x_t, std::size_t n,
                                           const std::vector<double>& alpha,
                                           const std::vector<double>& sigma) const;
  std::vector<double> weight_values(const std::vector<double>& x_t, std::size_t n,
                                    const std::vector<double>& alpha,
                                    const std::vector<double>& sigma) const;
};

struct ExplicitDsmLoss {
  Tensor loss;
  double real_term = 0.0;
  double fake_term = 0.0;
};

// Two-sided score-form regression of the explicit mixture score onto the
// denoising targets -eps/sigma, weighted per row by sigma^2 (sigma^2 +
// sigma_data^2)/sigma_data^2 (the denoiser-form weight expressed for scores)
// and by alpha / 1-alpha. Trains the fake net and the head jointly.
ExplicitDsmLoss explicit_dsm_loss(Tape& tape, const ExplicitScoreBundle& bundle,
                                  const Tensor& real, const Tensor& fake,
                                  const std::vector<double>& alpha,
                                  const std::vector<double>& sigma, Rng& rng);

// dir_i = w_dmd_i * D_i * (s_fake_i - s_teacher_i) / alpha_i, frozen. w_dmd
// uses the teacher's denoiser and can be disabled.
objectives::Direction smd_direction(const ExplicitScoreBundle& bundle,
                                    const std::vector<double>& x,
                                    const std::vector<double>& x_t, std::size_t n,
                                    const std::vector<double>& alpha,
                                    const std::vector<double>& sigma, bool use_w_dmd,
                                    double eps);

// alpha * mean (1 - d_real)^2 + (1 - alpha) * mean d_fake^2; the squared-
// error form of the discrimination objective that the score-matching
// objective factors into.
double lecam_reduced_objective(const std::vector<double>& d_real,
                               const std::vector<double>& d_fake, double alpha);

}  // namespace somix::distill
