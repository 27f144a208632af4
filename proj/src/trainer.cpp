#include "somix/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace somix {

namespace {

using ad::Tape;
using ad::Tensor;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

oracles::GaussianMixture gmm_from_lists(const std::vector<double>& w,
                                        const std::vector<std::vector<double>>& means,
                                        const std::vector<double>& vars, const char* what) {
  if (w.empty() || means.empty() || vars.empty())
    throw std::runtime_error(std::string(what) + ": mixture weights/means/variances required");
  return oracles::GaussianMixture(w, means, vars);
}

std::size_t data_dim_of(const TrainConfig& cfg) {
  if (cfg.data.name == "gmm") {
    if (cfg.data.gmm_means.empty())
      throw std::runtime_error("[data]: gmm dataset needs gmm_means");
    return cfg.data.gmm_means[0].size();
  }
  return 2;  // swiss_roll
}

nets::Activation act_or(const std::string& s, const char* fallback) {
  return nets::activation_from_string(s.empty() ? fallback : s);
}

nets::ScoreNetSpec make_score_spec(const TrainConfig& cfg, std::size_t dim, double sigma_data,
                                   bool alpha_conditioned, bool head) {
  nets::ScoreNetSpec s;
  s.data_dim = dim;
  s.hidden = cfg.score.hidden;
  s.activation = act_or(cfg.score.activation, "silu");
  s.alpha_embed_dim = cfg.score.alpha_embed_dim;
  s.noise_embed_dim = cfg.score.noise_embed_dim;
  s.fourier_scale = cfg.score.fourier_scale;
  s.alpha_conditioned = alpha_conditioned;
  s.discriminator_head = head;
  s.disc_hidden = cfg.score.disc_hidden;
  s.sigma_data = sigma_data;
  s.sigma_min = cfg.schedule.sigma_min;
  s.sigma_max = cfg.schedule.sigma_max;
  s.seed = derive_seed(cfg.seed, 2);
  return s;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void require_zero_grads(std::vector<nets::Param> ps, const char* who) {
  for (auto& p : ps) {
    if (!p.tensor.requires_grad()) continue;
    for (double g : p.tensor.grad())
      if (g != 0.0)
        throw std::logic_error(std::string("gradient leaked into frozen ") + who +
                               " parameters (" + p.name + ")");
  }
}

std::vector<std::vector<double>> snapshot_values(std::vector<nets::Param> ps) {
  std::vector<std::vector<double>> out;
  out.reserve(ps.size());
  for (auto& p : ps) out.push_back(p.tensor.data());
  return out;
}

void require_unchanged(std::vector<nets::Param> ps, const std::vector<std::vector<double>>& snap,
                       const char* who) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i].tensor.data() != snap[i])
      throw std::logic_error(std::string(who) + " parameters changed while they were frozen (" +
                             ps[i].name + ")");
}

void fill_param_from(const ArrayRecord& a, nets::Param& p) {
  if (a.dims.size() != 2 || a.dims[0] != p.tensor.rows() || a.dims[1] != p.tensor.cols())
    throw std::runtime_error("checkpoint: shape mismatch for array " + p.name);
  p.tensor.data() = a.data;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();

  if (cfg_.data.name == "swiss_roll") {
    dataset_ = std::make_unique<data::Dataset>(data::swiss_roll(
        cfg_.data.n, cfg_.data.noise_std, cfg_.data.holdout_fraction, cfg_.data.seed));
  } else {
    auto gm = gmm_from_lists(cfg_.data.gmm_weights, cfg_.data.gmm_means, cfg_.data.gmm_variances,
                             "[data]");
    dataset_ = std::make_unique<data::Dataset>(
        data::gmm_dataset(gm, cfg_.data.n, cfg_.data.holdout_fraction, cfg_.data.seed));
  }
  if (dataset_->train_rows() < cfg_.batch_size)
    throw std::runtime_error("trainer: training split has fewer rows than batch_size");
  iter_.emplace(*dataset_, cfg_.batch_size, derive_seed(cfg_.seed, 3));

  if (cfg_.sigma_data > 0.0) {
    sigma_data_ = cfg_.sigma_data;
  } else {
    double ss = 0.0;
    for (double v : dataset_->train) ss += v * v;
    sigma_data_ = std::sqrt(ss / static_cast<double>(dataset_->train.size()));
  }

  const std::size_t dim = dataset_->dim;
  if (has_generator()) {
    nets::GeneratorSpec gs;
    gs.data_dim = dim;
    gs.latent_dim = cfg_.generator.latent_dim ? cfg_.generator.latent_dim : dim;
    gs.hidden = cfg_.generator.hidden;
    gs.activation = act_or(cfg_.generator.activation, "leaky_relu");
    gs.seed = derive_seed(cfg_.seed, 1);
    gen_.emplace(gs, "gen");
    opt_gen_.emplace(gen_->params(),
                     AdamW::Options{cfg_.lr_gen, cfg_.beta1, cfg_.beta2, cfg_.adam_eps,
                                    cfg_.weight_decay});
  }

  if (cfg_.mode == "smd") {
    std::shared_ptr<distill::TeacherScore> teacher;
    if (cfg_.teacher.kind == "analytic") {
      const bool own = !cfg_.teacher.gmm_weights.empty();
      auto gm = own ? gmm_from_lists(cfg_.teacher.gmm_weights, cfg_.teacher.gmm_means,
                                     cfg_.teacher.gmm_variances, "[teacher]")
                    : gmm_from_lists(cfg_.data.gmm_weights, cfg_.data.gmm_means,
                                     cfg_.data.gmm_variances,
                                     "[teacher]: analytic teacher with no mixture given and"
                                     " a non-gmm dataset");
      teacher = std::make_shared<distill::AnalyticGmmTeacher>(std::move(gm));
    } else {
      double tmin = 0.0, tmax = 0.0;
      teacher = load_teacher_checkpoint(cfg_.teacher.path, &tmin, &tmax);
      if (tmin > cfg_.schedule.sigma_min || tmax < cfg_.schedule.sigma_max)
        throw std::runtime_error("teacher checkpoint covers sigma in [" + std::to_string(tmin) +
                                 ", " + std::to_string(tmax) +
                                 "], narrower than this run's schedule");
    }
    if (teacher->dim() != dim)
      throw std::runtime_error("teacher dimensionality does not match the dataset");
    bundle_.emplace(std::move(teacher),
                    nets::AmortizedScoreNet(make_score_spec(cfg_, dim, sigma_data_, false, true),
                                            "fake"));
    opt_score_.emplace(bundle_->fake.trainable_params(),
                       AdamW::Options{cfg_.lr_score, cfg_.beta1, cfg_.beta2, cfg_.adam_eps,
                                      cfg_.weight_decay});
  } else {
    const bool amortized = cfg_.mode == "smt";
    score_.emplace(make_score_spec(cfg_, dim, sigma_data_, amortized, amortized), "score");
    opt_score_.emplace(score_->trainable_params(),
                       AdamW::Options{cfg_.lr_score, cfg_.beta1, cfg_.beta2, cfg_.adam_eps,
                                      cfg_.weight_decay});
  }

  rng_train_ = Rng(derive_seed(cfg_.seed, 4));
  if (cfg_.warmup_steps == 0 || !has_generator()) warmup_done_ = true;
}

nets::GeneratorNet& Trainer::generator() {
  if (!gen_) throw std::runtime_error("trainer: this mode has no generator");
  return *gen_;
}

nets::AmortizedScoreNet& Trainer::score_net() {
  if (!score_) throw std::runtime_error("trainer: this mode has no amortized score net");
  return *score_;
}

distill::ExplicitScoreBundle& Trainer::bundle() {
  if (!bundle_) throw std::runtime_error("trainer: this mode has no distillation bundle");
  return *bundle_;
}

std::vector<nets::Param> Trainer::all_params() {
  std::vector<nets::Param> ps;
  if (gen_)
    for (auto& p : gen_->params()) ps.push_back(p);
  if (score_)
    for (auto& p : score_->state_params()) ps.push_back(p);
  if (bundle_)
    for (auto& p : bundle_->fake.state_params()) ps.push_back(p);
  return ps;
}

ad::Tensor Trainer::next_real_batch() {
  std::vector<double> buf(cfg_.batch_size * dataset_->dim);
  iter_->next(buf.data());
  return Tensor::from_data(cfg_.batch_size, dataset_->dim, std::move(buf));
}

std::vector<double> Trainer::draw_alpha_generator(std::size_t n) {
  const std::size_t k = cfg_.per_sample_draws ? n : 1;
  std::vector<double> a(k);
  for (auto& v : a) v = cfg_.alpha_binary ? 1.0 : cfg_.alpha_sampler.sample_generator(rng_train_);
  return a;
}

std::vector<double> Trainer::draw_alpha_score(std::size_t n) {
  const std::size_t k = cfg_.per_sample_draws ? n : 1;
  std::vector<double> a(k);
  for (auto& v : a) {
    if (cfg_.alpha_binary)
      v = rng_train_.uniform() < cfg_.alpha_sampler.zero_fraction ? 0.0 : 1.0;
    else
      v = cfg_.alpha_sampler.sample_score(rng_train_);
  }
  return a;
}

std::vector<double> Trainer::draw_sigma(std::size_t n) {
  const std::size_t k = cfg_.per_sample_draws ? n : 1;
  std::vector<double> s(k);
  for (auto& v : s) v = cfg_.schedule.sample(rng_train_);
  return s;
}

// Warmup trains the generator as a plain denoiser: g(x + sigma*eps) -> x over
// the training noise schedule. The latent and the data must share a width for
// this to type-check; at generation time z ~ N(0, I) is then treated as one
// more noisy input and lands near the data manifold instead of at a random
// blob, which is what the alternating phase needs to start from.
void Trainer::warmup(std::ostream* progress) {
  if (warmup_done_) return;
  const std::size_t n = cfg_.batch_size;
  const std::size_t d = dataset_->dim;
  if (gen_->spec().latent_dim != d)
    throw std::invalid_argument("warmup: denoising init needs latent_dim == data dim");
  AdamW wopt(gen_->params(), AdamW::Options{cfg_.lr_warmup, cfg_.beta1, cfg_.beta2, cfg_.adam_eps,
                                            cfg_.weight_decay});
  const std::size_t every = std::max<std::size_t>(1, cfg_.warmup_steps / 5);
  for (std::size_t w = 1; w <= cfg_.warmup_steps; ++w) {
    bool failed = false;
    double loss_val = 0.0;
    try {
      Tensor real = next_real_batch();
      const auto sig = objectives::expand_rows(draw_sigma(n), n);
      std::vector<double> noisy(n * d);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
          noisy[i * d + j] = real.data()[i * d + j] + sig[i] * rng_train_.normal();
      Tape tape;
      Tensor xh = gen_->forward(tape, Tensor::from_data(n, d, noisy));
      Tensor loss = ad::mean(tape, ad::row_sumsq(tape, ad::sub(tape, xh, real)));
      loss_val = loss.value();
      wopt.zero_grad();
      tape.backward(loss);
      failed = !wopt.step();
    } catch (const ad::NumericError&) {
      failed = true;
    }
    note_skip(failed);
    if (progress && (w % every == 0 || w == cfg_.warmup_steps)) {
      (*progress) << "warmup " << w << "/" << cfg_.warmup_steps << " loss " << loss_val << std::endl;
    }
  }
  warmup_done_ = true;
}

StepReport Trainer::smt_like_step() {
  StepReport r;
  const std::size_t n = cfg_.batch_size;
  const std::size_t d = dataset_->dim;
  const bool smd = is_smd();
  nets::AmortizedScoreNet& snet = smd ? bundle_->fake : *score_;
  bool any_fail = false;

  // Generator update.
  const std::vector<double> alpha_g = draw_alpha_generator(n);
  const std::vector<double> sigma_g = draw_sigma(n);
  r.alpha = mean_of(alpha_g);
  r.sigma = mean_of(sigma_g);
  try {
    Tape tape;
    Tensor z = gen_->sample_latent(n, rng_train_);
    Tensor x = gen_->forward(tape, z);
    std::vector<double> noise(n * d);
    const auto sig = objectives::expand_rows(sigma_g, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) noise[i * d + j] = sig[i] * rng_train_.normal();
    Tensor x_t = ad::add(tape, x, Tensor::from_data(n, d, noise));

    objectives::Direction dir;
    if (smd) {
      dir = distill::smd_direction(*bundle_, x.data(), x_t.data(), n, alpha_g, sigma_g,
                                   cfg_.use_w_dmd, cfg_.weight_eps);
    } else {
      objectives::AdaptiveWeightOptions w{cfg_.use_w_alpha, cfg_.use_w_dmd, cfg_.weight_eps};
      dir = objectives::smt_direction(*score_, x.data(), x_t.data(), n, alpha_g, sigma_g, w);
    }
    r.w_alpha = dir.mean_w_alpha;
    r.w_dmd = dir.mean_w_dmd;

    Tensor loss = objectives::inner_surrogate(tape, x_t, dir.dir);
    r.loss_gen_surrogate = loss.value();
    if (cfg_.lambda_gan != 0.0) {
      Tensor gg = objectives::gan_generator_loss(tape, snet, x_t, alpha_g, sigma_g);
      r.loss_gan_gen = gg.value();
      loss = ad::add(tape, loss, ad::mul_scalar(tape, gg, cfg_.lambda_gan));
    }
    if (cfg_.debug_checks) opt_score_->zero_grad();
    opt_gen_->zero_grad();
    tape.backward(loss);
    if (cfg_.debug_checks)
      require_zero_grads(smd ? bundle_->fake.trainable_params() : score_->trainable_params(),
                         "score");
    r.grad_norm_gen = opt_gen_->grad_norm();
    if (!opt_gen_->step()) any_fail = true;
    r.gen_updates = 1;
  } catch (const ad::NumericError&) {
    any_fail = true;
  }

  // Score updates with the generator frozen.
  std::vector<std::vector<double>> theta_snap;
  if (cfg_.debug_checks) theta_snap = snapshot_values(gen_->params());
  double loss_sum = 0.0, disc_sum = 0.0, gnorm_sum = 0.0;
  std::size_t done = 0;
  for (std::size_t k = 0; k < cfg_.score_subiters; ++k) {
    try {
      Tensor real = next_real_batch();
      Tensor fake = Tensor::from_data(n, d, gen_->sample(n, rng_train_));
      const std::vector<double> alpha_s = draw_alpha_score(n);
      const std::vector<double> sigma_s = draw_sigma(n);
      Tape tape;
      Tensor loss;
      if (smd) {
        auto dsm = distill::explicit_dsm_loss(tape, *bundle_, real, fake, alpha_s, sigma_s,
                                              rng_train_);
        loss = dsm.loss;
      } else {
        auto dsm = objectives::mixture_dsm_loss(tape, *score_, real, fake, alpha_s, sigma_s,
                                                rng_train_);
        loss = dsm.loss;
        if (cfg_.mu_disc != 0.0) {
          Tensor dl = objectives::gan_discriminator_loss(tape, *score_, real, fake, alpha_s,
                                                         sigma_s, rng_train_);
          disc_sum += dl.value();
          loss = ad::add(tape, loss, ad::mul_scalar(tape, dl, cfg_.mu_disc));
        }
      }
      const double lv = loss.value();
      opt_score_->zero_grad();
      if (cfg_.debug_checks && opt_gen_) opt_gen_->zero_grad();
      tape.backward(loss);
      if (cfg_.debug_checks) require_zero_grads(gen_->params(), "generator");
      gnorm_sum += opt_score_->grad_norm();
      if (!opt_score_->step()) {
        any_fail = true;
      } else {
        loss_sum += lv;
        ++done;
      }
    } catch (const ad::NumericError&) {
      any_fail = true;
    }
  }
  if (cfg_.debug_checks) require_unchanged(gen_->params(), theta_snap, "generator");
  r.score_updates = done;
  if (done) {
    r.loss_score = loss_sum / static_cast<double>(done);
    r.loss_gan_disc = disc_sum / static_cast<double>(done);
    r.grad_norm_score = gnorm_sum / static_cast<double>(done);
  }
  r.skipped = any_fail;
  return r;
}

StepReport Trainer::pretrain_step() {
  StepReport r;
  const std::size_t n = cfg_.batch_size;
  try {
    Tensor real = next_real_batch();
    const std::vector<double> sigma = draw_sigma(n);
    r.sigma = mean_of(sigma);
    Tape tape;
    Tensor x_t = objectives::noised_copy(tape, real, sigma, rng_train_);
    Tensor f = score_->denoiser(tape, x_t, {0.0}, sigma);
    const auto sig = objectives::expand_rows(sigma, n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = edm_loss_weight(sig[i], sigma_data_);
    Tensor loss = objectives::weighted_denoise_residual(tape, f, real, w);
    r.loss_score = loss.value();
    opt_score_->zero_grad();
    tape.backward(loss);
    r.grad_norm_score = opt_score_->grad_norm();
    if (!opt_score_->step()) r.skipped = true;
    else r.score_updates = 1;
  } catch (const ad::NumericError&) {
    r.skipped = true;
  }
  return r;
}

StepReport Trainer::step() {
  const auto t0 = std::chrono::steady_clock::now();
  StepReport r = has_generator() ? smt_like_step() : pretrain_step();
  r.step = ++step_;
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                  .count();
  write_metrics(r);
  note_skip(r.skipped);
  return r;
}

void Trainer::note_skip(bool any_skip) {
  if (!any_skip) {
    consecutive_skips_ = 0;
    return;
  }
  ++consecutive_skips_;
  ++skipped_total_;
  if (consecutive_skips_ >= cfg_.skip_abort_limit)
    throw TrainingAborted("aborting: " + std::to_string(consecutive_skips_) +
                          " consecutive steps produced non-finite losses or gradients");
}

void Trainer::write_metrics(const StepReport& r) {
  if (cfg_.metrics_path.empty()) return;
  if (!metrics_) {
    metrics_ = std::make_unique<std::ofstream>(cfg_.metrics_path, std::ios::app);
    if (!*metrics_)
      throw std::runtime_error("trainer: cannot open metrics file " + cfg_.metrics_path);
  }
  nlohmann::json j{{"step", r.step},
                   {"loss_score", r.loss_score},
                   {"loss_gen_surrogate", r.loss_gen_surrogate},
                   {"loss_gan_gen", r.loss_gan_gen},
                   {"loss_gan_disc", r.loss_gan_disc},
                   {"grad_norm_gen", r.grad_norm_gen},
                   {"grad_norm_score", r.grad_norm_score},
                   {"alpha", r.alpha},
                   {"sigma", r.sigma},
                   {"w_alpha", r.w_alpha},
                   {"w_dmd", r.w_dmd},
                   {"wall_ms", r.wall_ms}};
  (*metrics_) << j.dump() << "\n";
  metrics_->flush();
}

void Trainer::run(std::ostream* progress) {
  if (!warmup_done_) warmup(progress);
  const std::size_t total = cfg_.total_steps;
  const std::size_t every = std::max<std::size_t>(1, total / 20);
  while (step_ < total) {
    StepReport r = step();
    if (progress && (r.step % every == 0 || r.step == total)) {
      (*progress) << "step " << r.step << "/" << total << " loss_score " << r.loss_score
                  << " surrogate " << r.loss_gen_surrogate << " w_alpha " << r.w_alpha
                  << " w_dmd " << r.w_dmd << (r.skipped ? " [skipped]" : "") << "\n";
      progress->flush();
    }
    if (cfg_.checkpoint_every && !cfg_.checkpoint_path.empty() &&
        step_ % cfg_.checkpoint_every == 0 && step_ < total)
      save_checkpoint(cfg_.checkpoint_path);
  }
  if (!cfg_.checkpoint_path.empty()) save_checkpoint(cfg_.checkpoint_path);
}

std::vector<double> Trainer::sample(std::size_t n, Rng& rng) const {
  if (!gen_) throw std::runtime_error("trainer: this mode has no generator to sample");
  if (n == 0) return {};
  return gen_->sample(n, rng);
}

void Trainer::save_checkpoint(const std::string& path) {
  CheckpointData ck;
  ck.version = checkpoint_version;
  nlohmann::json rt;
  rt["step"] = step_;
  rt["warmup_done"] = warmup_done_;
  rt["consecutive_skips"] = consecutive_skips_;
  rt["skipped_total"] = skipped_total_;
  rt["sigma_data"] = sigma_data_;
  rt["rng_train"] = rng_train_.save_state();
  const auto ist = iter_->state();
  rt["iter_rng"] = ist.rng_epoch_start;
  rt["iter_cursor"] = ist.cursor;
  if (opt_gen_) {
    rt["opt_gen_step"] = opt_gen_->step_count();
    rt["opt_gen_skipped"] = opt_gen_->skipped_count();
  }
  if (opt_score_) {
    rt["opt_score_step"] = opt_score_->step_count();
    rt["opt_score_skipped"] = opt_score_->skipped_count();
  }
  ck.config = nlohmann::json{{"config", cfg_.to_json()}, {"runtime", rt}};

  for (auto& p : all_params())
    ck.arrays.push_back(ArrayRecord{p.name, {p.tensor.rows(), p.tensor.cols()}, p.tensor.data()});
  auto push_opt = [&ck](AdamW& opt) {
    for (auto& sa : opt.state_arrays())
      ck.arrays.push_back(ArrayRecord{sa.name, {sa.values->size()}, *sa.values});
  };
  if (opt_gen_) push_opt(*opt_gen_);
  if (opt_score_) push_opt(*opt_score_);
  save_checkpoint_file(path, ck);
}

Trainer Trainer::from_checkpoint(const std::string& path) {
  CheckpointData ck = load_checkpoint_file(path);
  if (!ck.config.contains("config") || !ck.config.contains("runtime"))
    throw std::runtime_error("checkpoint: missing config or runtime section");
  Trainer t(TrainConfig::from_json(ck.config.at("config")));
  const nlohmann::json& rt = ck.config.at("runtime");

  const double stored_sd = rt.at("sigma_data").get<double>();
  if (std::abs(stored_sd - t.sigma_data_) >
      1e-12 * std::max(1.0, std::abs(stored_sd)))
    throw std::runtime_error("checkpoint: stored sigma_data disagrees with the config/dataset");

  std::set<std::string> consumed;
  for (auto& p : t.all_params()) {
    fill_param_from(ck.find(p.name), p);
    consumed.insert(p.name);
  }
  auto pull_opt = [&](AdamW& opt, const char* stepk, const char* skipk) {
    for (auto& sa : opt.state_arrays()) {
      const ArrayRecord& a = ck.find(sa.name);
      if (a.data.size() != sa.values->size())
        throw std::runtime_error("checkpoint: shape mismatch for array " + sa.name);
      *sa.values = a.data;
      consumed.insert(sa.name);
    }
    opt.step_counter() = rt.at(stepk).get<std::uint64_t>();
    opt.skipped_counter() = rt.at(skipk).get<std::uint64_t>();
  };
  if (t.opt_gen_) pull_opt(*t.opt_gen_, "opt_gen_step", "opt_gen_skipped");
  if (t.opt_score_) pull_opt(*t.opt_score_, "opt_score_step", "opt_score_skipped");
  for (const auto& a : ck.arrays)
    if (!consumed.count(a.name))
      throw std::runtime_error("checkpoint: unexpected array " + a.name);

  t.step_ = rt.at("step").get<std::size_t>();
  t.warmup_done_ = rt.at("warmup_done").get<bool>();
  t.consecutive_skips_ = rt.at("consecutive_skips").get<std::uint64_t>();
  t.skipped_total_ = rt.at("skipped_total").get<std::uint64_t>();
  t.rng_train_.load_state(rt.at("rng_train").get<std::string>());
  data::BatchIterator::State ist;
  ist.rng_epoch_start = rt.at("iter_rng").get<std::string>();
  ist.cursor = rt.at("iter_cursor").get<std::size_t>();
  t.iter_->restore(ist);
  return t;
}

std::shared_ptr<distill::TeacherScore> load_teacher_checkpoint(const std::string& path,
                                                               double* sigma_min_out,
                                                               double* sigma_max_out) {
  CheckpointData ck = load_checkpoint_file(path);
  if (!ck.config.contains("config") || !ck.config.contains("runtime"))
    throw std::runtime_error("teacher checkpoint: missing config or runtime section");
  TrainConfig cfg = TrainConfig::from_json(ck.config.at("config"));
  if (cfg.mode != "pretrain_teacher")
    throw std::runtime_error("teacher checkpoint was not written by a pretrain_teacher run");
  const double sigma_data = ck.config.at("runtime").at("sigma_data").get<double>();
  nets::AmortizedScoreNet net(
      make_score_spec(cfg, data_dim_of(cfg), sigma_data, false, false), "score");
  for (auto& p : net.state_params()) fill_param_from(ck.find(p.name), p);
  if (sigma_min_out) *sigma_min_out = cfg.schedule.sigma_min;
  if (sigma_max_out) *sigma_max_out = cfg.schedule.sigma_max;
  return std::make_shared<distill::FrozenNetTeacher>(std::move(net));
}

}  // namespace somix
