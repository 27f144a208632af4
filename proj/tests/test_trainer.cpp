#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "somix/adamw.hpp"
#include "somix/checkpoint.hpp"
#include "somix/metrics.hpp"
#include "somix/trainer.hpp"

using namespace somix;
using ad::Tape;
using ad::Tensor;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.mode = "smt";
  cfg.seed = 5;
  cfg.total_steps = 6;
  cfg.warmup_steps = 3;
  cfg.batch_size = 32;
  cfg.score_subiters = 2;
  cfg.generator.hidden = {16, 16};
  cfg.generator.activation = "leaky_relu";
  cfg.score.hidden = {16, 16};
  cfg.score.activation = "silu";
  cfg.score.alpha_embed_dim = 8;
  cfg.score.noise_embed_dim = 8;
  cfg.score.disc_hidden = {8};
  cfg.data.name = "swiss_roll";
  cfg.data.n = 400;
  cfg.data.noise_std = 0.05;
  cfg.data.holdout_fraction = 0.2;
  cfg.data.seed = 2;
  cfg.metrics_path = "";
  cfg.checkpoint_path = "";
  return cfg;
}

}  // namespace

TEST_CASE("adamw converges on a quadratic and decays without gradients") {
  Tensor x = Tensor::from_data(1, 1, {10.0}, true);
  AdamW opt({{"x", x}}, AdamW::Options{0.05, 0.9, 0.999, 1e-8, 0.0});
  for (int i = 0; i < 2000; ++i) {
    opt.zero_grad();
    Tape t;
    Tensor d = ad::add_scalar(t, x, -3.0);
    Tensor loss = ad::mul(t, d, d);
    t.backward(loss);
    CHECK(opt.step());
  }
  CHECK(x.data()[0] == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(opt.step_count() == 2000);

  // Zero gradients: the only motion is the decoupled decay x *= 1 - lr*wd.
  Tensor y = Tensor::from_data(1, 1, {4.0}, true);
  AdamW opt2({{"y", y}}, AdamW::Options{0.1, 0.9, 0.999, 1e-8, 0.5});
  opt2.zero_grad();
  CHECK(opt2.step());
  CHECK(y.data()[0] == doctest::Approx(4.0 * (1.0 - 0.1 * 0.5)).epsilon(1e-12));
}

TEST_CASE("adamw skips a step wholesale on non-finite gradients") {
  Tensor x = Tensor::from_data(1, 2, {1.0, 2.0}, true);
  AdamW opt({{"x", x}}, AdamW::Options{});
  opt.zero_grad();
  x.grad()[0] = std::nan("");
  x.grad()[1] = 5.0;
  CHECK_FALSE(opt.step());
  CHECK(x.data()[0] == 1.0);
  CHECK(x.data()[1] == 2.0);
  CHECK(opt.step_count() == 0);
  CHECK(opt.skipped_count() == 1);
}

TEST_CASE("adamw grad_norm reports the global l2 norm") {
  Tensor a = Tensor::from_data(1, 2, {0.0, 0.0}, true);
  Tensor b = Tensor::from_data(1, 1, {0.0}, true);
  AdamW opt({{"a", a}, {"b", b}}, AdamW::Options{});
  a.grad()[0] = 3.0;
  a.grad()[1] = 0.0;
  b.grad()[0] = 4.0;
  CHECK(opt.grad_norm() == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("warmup pulls generator samples toward the data") {
  TrainConfig cfg = tiny_config();
  cfg.warmup_steps = 300;
  cfg.data.n = 2000;
  Trainer tr(cfg);
  const auto& hold = tr.dataset().holdout;
  const std::size_t nh = tr.dataset().holdout_rows();
  Rng r1(9);
  const auto before = tr.sample(256, r1);
  const double ed_before = metrics::energy_distance(before.data(), 256, hold.data(), nh, 2);
  tr.warmup();
  CHECK(tr.warmup_done());
  Rng r2(9);
  const auto after = tr.sample(256, r2);
  const double ed_after = metrics::energy_distance(after.data(), 256, hold.data(), nh, 2);
  CHECK(ed_after < ed_before);
}

TEST_CASE("training steps run with internal consistency checks enabled") {
  TrainConfig cfg = tiny_config();
  cfg.debug_checks = true;  // verifies generator params frozen during score
                            // updates and vice versa, and zeroed grads
  Trainer tr(cfg);
  tr.warmup();
  for (int i = 0; i < 4; ++i) {
    const auto r = tr.step();
    CHECK(r.step == static_cast<std::size_t>(i + 1));
    CHECK(std::isfinite(r.loss_score));
    CHECK(std::isfinite(r.loss_gen_surrogate));
    CHECK(r.alpha >= 0.0);
    CHECK(r.sigma > 0.0);
  }
  CHECK(tr.step_count() == 4);
  CHECK(tr.skipped_steps() == 0);
}

TEST_CASE("metrics stream has one record per step with the pinned keys") {
  TrainConfig cfg = tiny_config();
  cfg.metrics_path = "test_metrics.jsonl";
  std::filesystem::remove(cfg.metrics_path);
  cfg.total_steps = 5;
  Trainer tr(cfg);
  tr.run(nullptr);
  std::ifstream in(cfg.metrics_path);
  REQUIRE(in.good());
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    ++count;
    CHECK(j.size() == 12);
    for (const char* key :
         {"step", "loss_score", "loss_gen_surrogate", "loss_gan_gen", "loss_gan_disc",
          "grad_norm_gen", "grad_norm_score", "alpha", "sigma", "w_alpha", "w_dmd", "wall_ms"})
      CHECK(j.contains(key));
    CHECK(j["step"] == count);
  }
  CHECK(count == 5);
  std::filesystem::remove(cfg.metrics_path);
}

TEST_CASE("checkpoints round-trip the full training state") {
  TrainConfig cfg = tiny_config();
  cfg.checkpoint_path = "test_ckpt.somx";
  Trainer tr(cfg);
  tr.warmup();
  for (int i = 0; i < 3; ++i) tr.step();
  tr.save_checkpoint(cfg.checkpoint_path);

  Trainer back = Trainer::from_checkpoint(cfg.checkpoint_path);
  CHECK(back.step_count() == 3);
  CHECK(back.warmup_done());
  CHECK(back.resolved_sigma_data() == tr.resolved_sigma_data());
  Rng r1(3), r2(3);
  CHECK(tr.sample(64, r1) == back.sample(64, r2));
  // Both continue identically.
  const auto a = tr.step();
  const auto b = back.step();
  CHECK(a.loss_score == b.loss_score);
  CHECK(a.loss_gen_surrogate == b.loss_gen_surrogate);
  CHECK(a.alpha == b.alpha);
  CHECK(a.sigma == b.sigma);
  std::filesystem::remove(cfg.checkpoint_path);
}

TEST_CASE("corrupted checkpoints are rejected") {
  TrainConfig cfg = tiny_config();
  Trainer tr(cfg);
  const std::string path = "test_corrupt.somx";
  tr.save_checkpoint(path);

  // Truncation
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string bytes = buf.str();
    bytes.resize(bytes.size() / 2);
    std::ofstream out(path, std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS(Trainer::from_checkpoint(path));

  // Wrong magic
  tr.save_checkpoint(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("BOGUS", 5);
  }
  CHECK_THROWS(Trainer::from_checkpoint(path));
  std::filesystem::remove(path);
}

TEST_CASE("teacher pretraining feeds the distillation mode") {
  TrainConfig pre = tiny_config();
  pre.mode = "pretrain_teacher";
  pre.total_steps = 10;
  pre.warmup_steps = 0;
  pre.checkpoint_path = "test_teacher.somx";
  Trainer tp(pre);
  tp.run(nullptr);

  double smin = 0.0, smax = 0.0;
  const auto teacher = load_teacher_checkpoint(pre.checkpoint_path, &smin, &smax);
  CHECK(teacher->dim() == 2);
  CHECK(smin == pre.schedule.sigma_min);
  CHECK(smax == pre.schedule.sigma_max);
  std::vector<double> xt{0.1, 0.2, -0.5, 0.8};
  std::vector<double> out(4);
  teacher->score(xt.data(), 2, {0.5}, out.data());
  for (const double v : out) CHECK(std::isfinite(v));

  TrainConfig smd = tiny_config();
  smd.mode = "smd";
  smd.teacher.kind = "checkpoint";
  smd.teacher.path = pre.checkpoint_path;
  smd.total_steps = 2;
  smd.warmup_steps = 1;
  Trainer td(smd);
  td.warmup();
  const auto r = td.step();
  CHECK(std::isfinite(r.loss_score));
  std::filesystem::remove(pre.checkpoint_path);

  // A generator checkpoint is not a teacher.
  TrainConfig gen = tiny_config();
  gen.checkpoint_path = "test_gen.somx";
  Trainer tg(gen);
  tg.save_checkpoint(gen.checkpoint_path);
  CHECK_THROWS(load_teacher_checkpoint(gen.checkpoint_path));
  std::filesystem::remove(gen.checkpoint_path);
}

TEST_CASE("analytic teacher defaults to the training mixture") {
  TrainConfig cfg = tiny_config();
  cfg.mode = "smd";
  cfg.data.name = "gmm";
  cfg.data.gmm_weights = {0.5, 0.5};
  cfg.data.gmm_means = {{-1.0, 0.0}, {1.0, 0.0}};
  cfg.data.gmm_variances = {0.1, 0.1};
  cfg.teacher.kind = "analytic";
  Trainer tr(cfg);
  tr.warmup();
  const auto r = tr.step();
  CHECK(std::isfinite(r.loss_score));
  CHECK(std::isfinite(r.loss_gen_surrogate));
}

TEST_CASE("configs that cannot train are rejected up front") {
  TrainConfig cfg = tiny_config();
  cfg.batch_size = 1000;  // more than the training split holds
  CHECK_THROWS(Trainer{cfg});

  TrainConfig bad = tiny_config();
  bad.mode = "nope";
  CHECK_THROWS(bad.validate());
}

TEST_CASE("sigma_data is estimated from the training split when unset") {
  TrainConfig cfg = tiny_config();
  cfg.data.name = "gmm";
  cfg.data.gmm_weights = {1.0};
  cfg.data.gmm_means = {{3.0, 4.0}};  // entry rms = sqrt((9+16)/2 + var)
  cfg.data.gmm_variances = {0.01};
  cfg.data.n = 4000;
  Trainer tr(cfg);
  CHECK(tr.resolved_sigma_data() == doctest::Approx(std::sqrt(12.51)).epsilon(0.02));

  cfg.sigma_data = 0.9;
  Trainer pinned(cfg);
  CHECK(pinned.resolved_sigma_data() == 0.9);
}
